#pragma once

#include "haps/channel.hpp"
#include "haps/fp_core.hpp"
#include "haps/metrics.hpp"
#include "haps/pf.hpp"
#include "haps/scenario.hpp"
#include "haps/sumrate.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace haps {

enum class Algo { kSumRate, kPf, kZf };
const char* to_string(Algo algo);
/// "sumrate", "pf", "zf" (also "zf-baseline"). Throws std::invalid_argument.
Algo parse_algo(const std::string& name);

enum class SweepVar { kNone, kFronthaul, kPower, kUsers, kTones, kLayout };
const char* to_string(SweepVar var);

/// One curve of a figure.
struct Arm {
  std::string variant;
  Algo algo = Algo::kSumRate;
  bool balloons = true;          // false: terrestrial-only on matched draws
  int cluster_size = 0;          // 0 keeps the configured size
  std::optional<ScenarioConfig> base;  // replaces the preset base
};

struct ExperimentPreset {
  std::string name;
  std::string description;
  ScenarioConfig base;
  SweepVar sweep = SweepVar::kNone;
  std::vector<double> values;  // empty when sweep is kNone
  std::vector<Arm> arms;
  int seeds = 10;
};

/// Built-in presets fig2-desk ... fig9-desk, at full scale if asked.
std::vector<ExperimentPreset> builtin_presets(bool paper_scale = false);
/// Throws std::invalid_argument for an unknown name.
ExperimentPreset find_preset(const std::string& name, bool paper_scale = false);
/// Throws std::invalid_argument on empty arms, non-finite or non-positive
/// sweep values.
void check_preset(const ExperimentPreset& preset);

/// Fronthaul in bit/s for both tiers, HBS power in dBm, total users (tier
/// split kept), tones, or cluster size for both tiers.
ScenarioConfig apply_sweep(ScenarioConfig config, SweepVar var, double value);
ScenarioConfig apply_arm(ScenarioConfig config, const Arm& arm);
/// Config of one (arm, sweep value) job before its seed is set.
ScenarioConfig resolve_config(const ExperimentPreset& preset, const Arm& arm, double value);

struct ZfResult {
  Association z;
  BeamformerSet w;
  std::vector<double> user_rates;
  bool rank_deficient = false;  // some cluster needed the ridge
  double fronthaul_residual = 0.0;
  MetricsReport report;
};

/// Nearest-cluster (mean BS distance) association, at most L*M strongest
/// users per cluster, zero-forcing per cluster with unit-norm columns and an
/// equal power that meets every BS power cap. Fronthaul is not enforced.
ZfResult baseline_zf(const Scenario& scenario, const ChannelSet& channels,
                     double serve_threshold = kServedThreshold);

struct RunOptions {
  SumRateSettings sumrate;
  PfSettings pf;
};

struct RunOutput {
  std::vector<TraceRow> trace;
  MetricsReport report;
  bool failed = false;
  std::string error;
  nlohmann::json notes = nlohmann::json::object();
};

/// Builds the scenario, draws the channels and runs one algorithm.
/// Failures are captured in the output with whatever trace exists.
RunOutput run_algorithm(const ScenarioConfig& config, Algo algo, const RunOptions& options = {});

std::vector<TraceRow> trace_rows(const SumRateRun& run);
std::vector<TraceRow> trace_rows(const PfRun& run);

struct JobResult {
  std::string variant;
  Algo algo = Algo::kSumRate;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  RunOutput output;
};

/// Every (seed, arm, sweep value) combination, ordered that way. Jobs run on
/// `threads` workers (0 = hardware concurrency).
std::vector<JobResult> run_experiment(const ExperimentPreset& preset,
                                      const std::vector<std::uint64_t>& seeds,
                                      const RunOptions& options = {}, unsigned threads = 0);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

inline const char* kTraceHeader =
    "preset,algo,variant,sweep_var,sweep_value,seed,iter,f_fp,sum_rate,power_residual,"
    "fronthaul_residual,served_count,jain,served_fraction,sum_log_avg_rate,inner_iters";

/// CSV body for one job (no header).
std::string trace_csv_rows(const ExperimentPreset& preset, const JobResult& job);

struct ArtifactInfo {
  std::vector<std::string> argv;
  std::string timestamp;
  RunOptions options;
  bool paper_scale = false;
};

/// trace_seed_<seed>.csv per seed, summary.json and manifest.json under
/// `dir` (created if missing). Returns the written paths.
std::vector<std::string> write_artifacts(const std::string& dir, const ExperimentPreset& preset,
                                         const std::vector<std::uint64_t>& seeds,
                                         const std::vector<JobResult>& jobs,
                                         const ArtifactInfo& info);

nlohmann::json summary_json(const ExperimentPreset& preset, const std::vector<JobResult>& jobs);
nlohmann::json manifest_json(const ExperimentPreset& preset, const std::vector<std::uint64_t>& seeds,
                             const ArtifactInfo& info);

const char* version();

}  // namespace haps
