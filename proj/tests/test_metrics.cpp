#include "doctest.h"

#include "haps/fp_core.hpp"
#include "haps/metrics.hpp"
#include "haps/numerics.hpp"

#include <cmath>
#include <limits>

using namespace haps;
using doctest::Approx;

TEST_CASE("jain examples") {
  for (double c : {0.01, 1.0, 7.5}) {
    const JainResult r = jain_index(std::vector<double>(5, c));
    CHECK(r.value == Approx(1.0).epsilon(1e-15));
    CHECK_FALSE(r.degenerate);
  }
  std::vector<double> one(10, 0.0);
  one[3] = 2.0;
  CHECK(jain_index(one).value == Approx(0.1).epsilon(1e-15));
  CHECK(jain_index({1.0, 2.0, 3.0}).value == Approx(36.0 / 42.0).epsilon(1e-15));
  CHECK(std::abs(jain_index({1.0, 2.0, 3.0}).value - 0.8571) < 1e-4);
}

TEST_CASE("jain degenerate and invalid input") {
  const JainResult z = jain_index({0.0, 0.0, 0.0, 0.0});
  CHECK(z.degenerate);
  CHECK(z.value == 0.25);
  CHECK_THROWS_AS(jain_index({}), std::invalid_argument);
  CHECK_THROWS_AS(jain_index({1.0, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(jain_index({1.0, std::numeric_limits<double>::quiet_NaN()}), std::invalid_argument);
}

TEST_CASE("jain is scale invariant and bounded") {
  Rng rng(31, Stream::kScratch);
  for (int trial = 0; trial < 500; ++trial) {
    const int u = 1 + static_cast<int>(rng.uniform() * 30);
    std::vector<double> r(u), s(u);
    const double c = std::pow(2.0, static_cast<int>(rng.uniform(-10.0, 10.0)));  // exact scaling
    for (int i = 0; i < u; ++i) {
      r[i] = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 5.0);
      s[i] = c * r[i];
    }
    const JainResult a = jain_index(r);
    if (a.degenerate) continue;
    CHECK(jain_index(s).value == a.value);
    CHECK(a.value >= 1.0 / u - 1e-15);
    CHECK(a.value <= 1.0 + 1e-15);
  }
}

TEST_CASE("served fraction examples") {
  CHECK(served_fraction({0.5, 1.0, 2.0}) == 1.0);
  CHECK(served_fraction({0.0, 0.001, 0.009}) == 0.0);
  std::vector<double> mixed(10, 0.0);
  mixed[0] = mixed[4] = mixed[9] = 0.2;
  CHECK(served_fraction(mixed) == Approx(0.3).epsilon(1e-15));
  CHECK(served_fraction({0.01}) == 1.0);  // threshold is inclusive
  CHECK(served_fraction({0.5, 1.5}, 1.0) == 0.5);
}

TEST_CASE("rate examples") {
  CHECK(rate(0.0) == 0.0);
  CHECK(rate(1.0) == 1.0);
  CHECK(rate(3.0) == 2.0);
  CHECK(rate(1023.0) == Approx(10.0).epsilon(1e-15));
}

TEST_CASE("summarize") {
  std::vector<TraceRow> trace(4);
  const double f[] = {1.0, 2.0, 1.5, 1.50001};
  for (int i = 0; i < 4; ++i) {
    trace[i].iter = i;
    trace[i].f_fp = f[i];
    trace[i].power_residual = i == 1 ? 2e-7 : -0.5;
    trace[i].fronthaul_residual = -0.1;
  }
  const std::vector<double> rates{1.0, 0.0, 3.0, 0.005};
  MetricsReport m = summarize(trace, rates, 10e6);
  CHECK(m.sum_rate == Approx(4.005).epsilon(1e-15));
  CHECK(m.sum_rate_bps == Approx(4.005e7).epsilon(1e-15));
  CHECK(m.served_fraction == 0.5);
  CHECK(m.jain == Approx(jain_index(rates).value).epsilon(1e-15));
  CHECK(m.iterations == 3);
  CHECK(m.monotonicity_violations == 1);
  CHECK(m.iterations_to_tol == 3);
  CHECK(m.max_power_residual == 2e-7);
  CHECK(m.max_fronthaul_residual == 0.0);  // slack is not reported, only violation

  trace[2].excused = true;
  m = summarize(trace, rates, 10e6);
  CHECK(m.monotonicity_violations == 0);

  const auto j = to_json(m);
  CHECK(j["served_fraction"] == 0.5);
  CHECK(j["user_rates"].size() == 4);
}
