#include "doctest.h"

#include "haps/harness.hpp"

using namespace haps;
using doctest::Approx;

// Values pinned from the first complete build. A change here means the
// numerics moved; re-pin only after checking why.

TEST_CASE("pinned: sum-rate driver, desk default seed 1") {
  const RunOutput r = run_algorithm(ScenarioConfig::desk_default(), Algo::kSumRate);
  REQUIRE_FALSE(r.failed);
  CHECK(r.trace.size() == 51);
  CHECK(r.trace.front().sum_rate == Approx(6.6348859741383235).epsilon(1e-6));
  CHECK(r.report.sum_rate == Approx(32.584524087066718).epsilon(1e-6));
  CHECK(r.trace.back().f_fp == Approx(32.575551529329474).epsilon(1e-6));
}

TEST_CASE("pinned: PF, desk terrestrial seed 1, four tones") {
  auto cfg = ScenarioConfig::desk_terrestrial();
  cfg.tones = 4;
  const RunOutput r = run_algorithm(cfg, Algo::kPf);
  REQUIRE_FALSE(r.failed);
  CHECK(r.report.jain == Approx(0.084232854358123929).epsilon(1e-6));
  CHECK(r.trace.back().sum_log_avg_rate == Approx(-128.34848353563208).epsilon(1e-6));
  CHECK(r.report.served_fraction == Approx(0.3).epsilon(1e-12));
  CHECK(r.report.sum_rate == Approx(0.68689080878573072).epsilon(1e-6));
}

TEST_CASE("pinned: zero-forcing baseline, desk default seed 1") {
  const RunOutput r = run_algorithm(ScenarioConfig::desk_default(), Algo::kZf);
  REQUIRE_FALSE(r.failed);
  CHECK(r.report.sum_rate == Approx(14.065266286334651).epsilon(1e-6));
  CHECK(r.report.served_fraction == Approx(0.45).epsilon(1e-12));
  CHECK_FALSE(r.notes["rank_deficient"].get<bool>());
}
