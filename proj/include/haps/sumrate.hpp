#pragma once

#include "haps/channel.hpp"
#include "haps/fp_core.hpp"
#include "haps/qcqp.hpp"
#include "haps/scenario.hpp"

#include <stdexcept>
#include <vector>

namespace haps {

struct SumRateSettings {
  double tol = 1e-4;        // relative change of f_fp that stops the loop
  int max_iters = 50;
  double solver_tol = 1e-6;
  double epsilon = kDefaultEpsilon;
  double slack = 1e-6;      // absolute monotonicity slack
  double serve_threshold = 0.01;
};

/// Frozen rates and sparsity weights for one (user, cluster) pair.
struct LinkWeights {
  double rate = 0.0;
  std::vector<double> beta;  // per BS block
};

struct SumRateState {
  Association z;
  BeamformerSet w;  // single tone
  LinkArray<LinkWeights> weights;
};

struct SumRateIter {
  int iter = 0;
  double f_fp = 0.0;      // surrogate after the beam solve
  double sum_rate = 0.0;  // sum of log2(1 + SINR) at the iterate
  double power_residual = 0.0;
  double fronthaul_residual = 0.0;
  int served_count = 0;
  double jain = 0.0;
  double served_fraction = 0.0;
  int associated = 0;
  bool reverted = false;         // association change rolled back
  bool refresh_excused = false;  // drop caused by refreshed rates/weights
  int solver_sweeps = 0;
};

struct SumRateRun {
  SumRateState state;
  std::vector<SumRateIter> trace;
  std::vector<double> user_rates;
  bool converged = false;
};

class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, SumRateRun partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const SumRateRun& partial() const { return partial_; }

 private:
  SumRateRun partial_;
};

/// Strongest-cluster association, per-BS equal-power matched filters, rates
/// and weights at that point, then a uniform down-scale if any fronthaul cap
/// is exceeded.
SumRateState initialize(const Scenario& scenario, const ChannelSet& channels,
                        double epsilon = kDefaultEpsilon);

/// Per-user rate (0 for unassociated users) at a single-carrier iterate.
std::vector<double> user_rates(const ChannelSet& channels, const BeamformerSet& w,
                               const Association& z, int num_users);

/// Fronthaul usage of w under the frozen weights, per BS (bit/s/Hz).
std::vector<double> fronthaul_load(const Scenario& scenario, const SumRateState& state);

/// Runs the alternating loop from `state` (iteration 0 of the trace is the
/// starting point). Throws SolverFailure carrying the partial run.
SumRateRun run(const Scenario& scenario, const ChannelSet& channels, SumRateState state,
               const SumRateSettings& settings = {});

/// initialize + run.
SumRateRun run_sumrate(const Scenario& scenario, const ChannelSet& channels,
                       const SumRateSettings& settings = {});

}  // namespace haps
