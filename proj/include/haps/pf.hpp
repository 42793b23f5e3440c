#pragma once

#include "haps/channel.hpp"
#include "haps/fp_core.hpp"
#include "haps/metrics.hpp"
#include "haps/qcqp.hpp"
#include "haps/scenario.hpp"

#include <vector>

namespace haps {

struct PfSettings {
  int slots = 60;
  double eta_avg = 0.1;
  double floor = 1e-6;       // warm-start floor on average rates
  double inner_tol = 1e-4;
  int inner_max = 30;
  double solver_tol = 1e-6;
  double epsilon = kDefaultEpsilon;
  double serve_threshold = kServedThreshold;
};

/// Selected user per (cluster, tone), -1 when the cluster's pool is empty.
struct Schedule {
  int clusters = 0;
  int tones = 0;
  std::vector<int> user;

  Schedule() = default;
  Schedule(int num_clusters, int num_tones)
      : clusters(num_clusters), tones(num_tones), user(static_cast<size_t>(num_clusters) * num_tones, -1) {}
  int& at(int cluster, int tone) { return user[static_cast<size_t>(cluster) * tones + tone]; }
  int at(int cluster, int tone) const { return user[static_cast<size_t>(cluster) * tones + tone]; }
  /// Scheduled links ordered by tone, then cluster.
  std::vector<Link> links() const;
};

/// Long-term average rate per user (towards its pool cluster).
struct AvgRates {
  std::vector<double> rbar;
  double eta = 0.1;
  int slot = 0;

  /// rbar <- (1 - eta) rbar + eta r.
  void update(const std::vector<double>& r);
};

/// Fixed pool per user: strongest eligible cluster by large-scale gain.
std::vector<int> pf_pools(const Scenario& scenario, const ChannelSet& channels);

/// Per-tone rate a pool user would get with a matched-filter probe at P_b/N
/// against the interference the other clusters' previous beams cause.
/// Entries outside the pools are 0.
LinkArray<double> probe_rates(const Scenario& scenario, const ChannelSet& channels,
                              const std::vector<int>& pools, const BeamformerSet& w_prev,
                              const std::vector<Link>& prev_links);

/// argmax over the pool of rate / rbar per (cluster, tone); ties go to the
/// lowest user id.
Schedule pf_schedule(const LinkArray<double>& tone_rates, const std::vector<int>& pools,
                     const AvgRates& avg);

/// alpha_u = 1 / rbar_u.
std::vector<double> pf_weights(const AvgRates& avg);

/// Per-user rate (1/N) sum over scheduled tones of log2(1 + SINR).
std::vector<double> ofdma_rates(const ChannelSet& channels, const BeamformerSet& w,
                                const std::vector<Link>& links, int num_users);

struct BeamStep {
  BeamformerSet w;
  std::vector<double> inner_f;  // weighted surrogate after each inner iteration
  KktReport last;
  double power_residual = 0.0;
  double fronthaul_residual = 0.0;
};

/// Weighted-sum-rate beams for a fixed schedule, starting from `w0`.
/// `rho` holds the frozen rate * beta per scheduled link and BS block.
BeamStep solve_beams(const Scenario& scenario, const ChannelSet& channels,
                     const std::vector<Link>& links, const std::vector<double>& weights,
                     const BeamformerSet& w0, const std::vector<std::vector<double>>& rho,
                     const PfSettings& settings = {});

/// Weighted surrogate sum_k alpha_k log2(1 + 2 Re{conj(y) h^H w} - |y|^2 (noise + I_k)).
double weighted_fp(const ChannelSet& channels, const BeamformerSet& w,
                   const std::vector<Link>& links, const std::vector<double>& link_weights,
                   const std::vector<Complex>& y);

struct PfSlot {
  TraceRow row;
  std::vector<double> inner_f;
  double slot_served = 0.0;  // fraction of users served in this slot
};

/// Row fields: jain is over the slot's per-user rates, served_fraction and
/// sum_log_avg_rate are over the long-term averages.
struct PfRun {
  std::vector<int> pools;
  AvgRates avg;
  std::vector<PfSlot> trace;  // slot 0 is the warm start
  std::vector<double> last_rates;

  /// Mean per-slot Jain index over slots 1..T.
  double mean_jain() const;
};

PfRun run_pf(const Scenario& scenario, const ChannelSet& channels, const PfSettings& settings = {});

}  // namespace haps
