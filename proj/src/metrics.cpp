#include "haps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace haps {

JainResult jain_index(const std::vector<double>& rates) {
  if (rates.empty()) throw std::invalid_argument("jain_index: no users");
  double sum = 0.0;
  double sq = 0.0;
  for (double r : rates) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("jain_index: bad rate");
    sum += r;
    sq += r * r;
  }
  const double u = static_cast<double>(rates.size());
  if (sq == 0.0) return {1.0 / u, true};
  return {std::clamp(sum * sum / (u * sq), 1.0 / u, 1.0), false};
}

double served_fraction(const std::vector<double>& rates, double threshold) {
  if (rates.empty()) return 0.0;
  const auto n = std::count_if(rates.begin(), rates.end(), [&](double r) { return r >= threshold; });
  return static_cast<double>(n) / static_cast<double>(rates.size());
}

MetricsReport summarize(const std::vector<TraceRow>& trace, const std::vector<double>& user_rates,
                        double bandwidth_hz, double tol, double slack, double threshold) {
  MetricsReport m;
  m.user_rates = user_rates;
  for (double r : user_rates) m.sum_rate += r;
  m.sum_rate_bps = m.sum_rate * bandwidth_hz;
  if (!user_rates.empty()) {
    const JainResult j = jain_index(user_rates);
    m.jain = j.value;
    m.jain_degenerate = j.degenerate;
    m.served_fraction = served_fraction(user_rates, threshold);
  }
  m.iterations = trace.empty() ? 0 : trace.back().iter;
  for (size_t i = 0; i < trace.size(); ++i) {
    m.max_power_residual = std::max(m.max_power_residual, trace[i].power_residual);
    m.max_fronthaul_residual = std::max(m.max_fronthaul_residual, trace[i].fronthaul_residual);
    if (i == 0) continue;
    const double prev = trace[i - 1].f_fp;
    const double cur = trace[i].f_fp;
    if (m.iterations_to_tol < 0 && std::abs(cur - prev) / std::max(1.0, std::abs(prev)) < tol) {
      m.iterations_to_tol = trace[i].iter;
    }
    if (cur < prev - slack && !trace[i].excused) ++m.monotonicity_violations;
  }
  return m;
}

nlohmann::json to_json(const MetricsReport& m) {
  return {{"sum_rate", m.sum_rate},
          {"sum_rate_bps", m.sum_rate_bps},
          {"jain", m.jain},
          {"jain_degenerate", m.jain_degenerate},
          {"served_fraction", m.served_fraction},
          {"user_rates", m.user_rates},
          {"iterations", m.iterations},
          {"iterations_to_tol", m.iterations_to_tol},
          {"monotonicity_violations", m.monotonicity_violations},
          {"max_power_residual", m.max_power_residual},
          {"max_fronthaul_residual", m.max_fronthaul_residual}};
}

}  // namespace haps
