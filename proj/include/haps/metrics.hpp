#pragma once

#include "json.hpp"

#include <vector>

namespace haps {

inline constexpr double kServedThreshold = 0.01;  // bit/s/Hz

struct JainResult {
  double value = 0.0;
  bool degenerate = false;  // all-zero input, value set to 1/U
};

/// (sum r)^2 / (U sum r^2). Throws std::invalid_argument for an empty vector
/// or a negative / non-finite rate.
JainResult jain_index(const std::vector<double>& rates);

/// Fraction of entries >= threshold.
double served_fraction(const std::vector<double>& rates, double threshold = kServedThreshold);

/// One row of a run trace, whichever driver produced it.
struct TraceRow {
  int iter = 0;
  double f_fp = 0.0;
  double sum_rate = 0.0;
  double power_residual = 0.0;
  double fronthaul_residual = 0.0;
  int served_count = 0;
  double jain = 0.0;
  double served_fraction = 0.0;
  double sum_log_avg_rate = 0.0;
  int inner_iters = 0;
  bool excused = false;  // surrogate drop explained by a weight refresh
};

struct MetricsReport {
  double sum_rate = 0.0;      // bit/s/Hz
  double sum_rate_bps = 0.0;  // times bandwidth
  double jain = 0.0;
  bool jain_degenerate = false;
  double served_fraction = 0.0;
  std::vector<double> user_rates;
  int iterations = 0;
  int iterations_to_tol = -1;       // first iteration whose relative change < tol
  int monotonicity_violations = 0;  // unexcused surrogate drops beyond slack
  double max_power_residual = 0.0;
  double max_fronthaul_residual = 0.0;
};

/// Final-iterate metrics from per-user rates plus convergence statistics
/// from the trace.
MetricsReport summarize(const std::vector<TraceRow>& trace, const std::vector<double>& user_rates,
                        double bandwidth_hz, double tol = 1e-4, double slack = 1e-6,
                        double threshold = kServedThreshold);

nlohmann::json to_json(const MetricsReport& report);

}  // namespace haps
