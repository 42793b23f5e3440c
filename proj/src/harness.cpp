#include "haps/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#ifndef HAPS_VERSION
#define HAPS_VERSION "0.0.0"
#endif

namespace haps {

const char* version() { return HAPS_VERSION; }

const char* to_string(Algo algo) {
  switch (algo) {
    case Algo::kSumRate: return "sumrate";
    case Algo::kPf: return "pf";
    case Algo::kZf: return "zf";
  }
  return "?";
}

Algo parse_algo(const std::string& name) {
  if (name == "sumrate") return Algo::kSumRate;
  if (name == "pf") return Algo::kPf;
  if (name == "zf" || name == "zf-baseline") return Algo::kZf;
  throw std::invalid_argument("unknown algorithm '" + name + "' (sumrate, pf, zf)");
}

const char* to_string(SweepVar var) {
  switch (var) {
    case SweepVar::kNone: return "none";
    case SweepVar::kFronthaul: return "fronthaul_bps";
    case SweepVar::kPower: return "hbs_power_dbm";
    case SweepVar::kUsers: return "users";
    case SweepVar::kTones: return "tones";
    case SweepVar::kLayout: return "cluster_size";
  }
  return "?";
}

namespace {

// 6 TBSs, 2 clusters, terrestrial users only.
ScenarioConfig pf_terrestrial(bool paper) {
  ScenarioConfig c = ScenarioConfig::desk_terrestrial();
  if (paper) c.terrestrial_users = 36;
  return c;
}

// 3 TBSs + 3 HBSs, one cluster per tier, same users as pf_terrestrial.
ScenarioConfig pf_two_tier(bool paper) {
  ScenarioConfig c = pf_terrestrial(paper);
  c.tbs.count = 3;
  c.hbs.count = 3;
  return c;
}

Arm arm(std::string variant, Algo algo, bool balloons = true, int cluster_size = 0,
        std::optional<ScenarioConfig> base = std::nullopt) {
  Arm a;
  a.variant = std::move(variant);
  a.algo = algo;
  a.balloons = balloons;
  a.cluster_size = cluster_size;
  a.base = std::move(base);
  return a;
}

std::vector<double> tone_values(bool paper) {
  if (paper) return {1, 2, 4, 8, 16, 32};
  return {1, 2, 4, 8};
}

}  // namespace

std::vector<ExperimentPreset> builtin_presets(bool paper) {
  const ScenarioConfig two_tier =
      paper ? ScenarioConfig::paper_default() : ScenarioConfig::desk_default();
  const int seeds = paper ? 5 : 10;

  std::vector<ExperimentPreset> out;
  {
    ExperimentPreset p;
    p.name = "fig2-desk";
    p.description = "sum-rate versus fronthaul capacity, two tiers vs terrestrial vs ZF";
    p.base = two_tier;
    p.sweep = SweepVar::kFronthaul;
    p.values = {20e6, 50e6, 100e6, 200e6, 500e6};
    p.arms = {arm("two-tier-L6", Algo::kSumRate, true, 6),
              arm("two-tier-L3", Algo::kSumRate, true, 3),
              arm("terrestrial", Algo::kSumRate, false),
              arm("zf-nearest", Algo::kZf)};
    p.seeds = seeds;
    out.push_back(p);
  }
  {
    ExperimentPreset p;
    p.name = "fig3-desk";
    p.description = "sum-rate versus HBS transmit power";
    p.base = two_tier;
    p.sweep = SweepVar::kPower;
    p.values = {10, 16, 22, 27, 32};
    p.arms = {arm("two-tier-L6", Algo::kSumRate, true, 6),
              arm("two-tier-L3", Algo::kSumRate, true, 3),
              arm("terrestrial", Algo::kSumRate, false)};
    p.seeds = seeds;
    out.push_back(p);
  }
  {
    ExperimentPreset p;
    p.name = "fig4-desk";
    p.description = "sum-rate versus number of users";
    p.base = two_tier;
    p.sweep = SweepVar::kUsers;
    p.values = paper ? std::vector<double>{50, 100, 150, 200} : std::vector<double>{10, 20, 30, 40};
    p.arms = {arm("two-tier", Algo::kSumRate), arm("terrestrial", Algo::kSumRate, false)};
    p.seeds = seeds;
    out.push_back(p);
  }
  {
    ExperimentPreset p;
    p.name = "fig5-desk";
    p.description = "served users of one deployment, terrestrial vs two tiers";
    p.base = two_tier;
    p.arms = {arm("terrestrial", Algo::kSumRate, false), arm("two-tier", Algo::kSumRate)};
    p.seeds = 1;
    out.push_back(p);
  }
  {
    ExperimentPreset p;
    p.name = "fig6-desk";
    p.description = "convergence of the sum-rate loop";
    p.base = two_tier;
    p.arms = {arm("two-tier", Algo::kSumRate)};
    p.seeds = seeds;
    out.push_back(p);
  }
  {
    ExperimentPreset p;
    p.name = "fig7-desk";
    p.description = "terrestrial PF: fairness and served users versus tones";
    p.base = pf_terrestrial(paper);
    p.sweep = SweepVar::kTones;
    p.values = tone_values(paper);
    p.arms = {arm("terrestrial", Algo::kPf)};
    p.seeds = seeds;
    out.push_back(p);
  }
  {
    ExperimentPreset p;
    p.name = "fig8-desk";
    p.description = "two-tier PF: fairness and served users versus tones";
    p.base = pf_two_tier(paper);
    p.sweep = SweepVar::kTones;
    p.values = tone_values(paper);
    p.arms = {arm("two-tier", Algo::kPf)};
    p.seeds = seeds;
    out.push_back(p);
  }
  {
    ExperimentPreset p;
    p.name = "fig9-desk";
    p.description = "PF on the same users: 6 TBSs vs 3 TBSs + 3 HBSs";
    p.base = pf_two_tier(paper);
    p.sweep = SweepVar::kTones;
    p.values = tone_values(paper);
    p.arms = {arm("terrestrial", Algo::kPf, true, 0, pf_terrestrial(paper)),
              arm("two-tier", Algo::kPf)};
    p.seeds = seeds;
    out.push_back(p);
  }
  return out;
}

ExperimentPreset find_preset(const std::string& name, bool paper_scale) {
  for (auto& p : builtin_presets(paper_scale)) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : builtin_presets(paper_scale)) known += " " + p.name;
  throw std::invalid_argument("unknown preset '" + name + "' (known:" + known + ")");
}

void check_preset(const ExperimentPreset& p) {
  if (p.name.empty()) throw std::invalid_argument("preset without a name");
  if (p.arms.empty()) throw std::invalid_argument(p.name + ": no arms");
  if (p.seeds < 1) throw std::invalid_argument(p.name + ": seeds < 1");
  if (p.sweep == SweepVar::kNone && !p.values.empty()) {
    throw std::invalid_argument(p.name + ": sweep values without a sweep variable");
  }
  if (p.sweep != SweepVar::kNone && p.values.empty()) {
    throw std::invalid_argument(p.name + ": empty sweep");
  }
  for (double v : p.values) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::invalid_argument(p.name + ": sweep value " + std::to_string(v) + " not positive");
    }
  }
}

ScenarioConfig apply_sweep(ScenarioConfig c, SweepVar var, double value) {
  switch (var) {
    case SweepVar::kNone:
      break;
    case SweepVar::kFronthaul:
      c.tbs.fronthaul_bps = value;
      c.hbs.fronthaul_bps = value;
      break;
    case SweepVar::kPower:
      c.hbs.max_power_dbm = value;
      break;
    case SweepVar::kUsers: {
      const int total = static_cast<int>(std::lround(value));
      const int base = c.terrestrial_users + c.aerial_users;
      const double share = base > 0 ? static_cast<double>(c.terrestrial_users) / base : 1.0;
      c.terrestrial_users = static_cast<int>(std::lround(total * share));
      c.aerial_users = total - c.terrestrial_users;
      break;
    }
    case SweepVar::kTones:
      c.tones = static_cast<int>(std::lround(value));
      break;
    case SweepVar::kLayout:
      c.tbs.cluster_size = static_cast<int>(std::lround(value));
      c.hbs.cluster_size = c.tbs.cluster_size;
      break;
  }
  return c;
}

ScenarioConfig apply_arm(ScenarioConfig c, const Arm& arm) {
  if (arm.cluster_size > 0) {
    c.tbs.cluster_size = arm.cluster_size;
    c.hbs.cluster_size = arm.cluster_size;
  }
  if (!arm.balloons) c = terrestrial_only(c);
  return c;
}

ScenarioConfig resolve_config(const ExperimentPreset& preset, const Arm& arm, double value) {
  return apply_arm(apply_sweep(arm.base ? *arm.base : preset.base, preset.sweep, value), arm);
}

// ---------------------------------------------------------------------------

ZfResult baseline_zf(const Scenario& s, const ChannelSet& ch, double threshold) {
  const int U = s.num_users();
  ZfResult out;
  out.z.serving.assign(U, -1);
  out.w = zero_beams(s, 1);

  // Nearest cluster by mean distance to its BSs.
  std::vector<std::vector<int>> members(s.num_clusters());
  for (int u = 0; u < U; ++u) {
    int best = -1;
    double best_d = 0.0;
    for (int q : eligible_clusters(u, s)) {
      double d = 0.0;
      for (int b : s.clusters[q].members) d += distance(s.users[u].pos, s.base_stations[b].pos);
      d /= static_cast<double>(s.clusters[q].members.size());
      if (best < 0 || d < best_d) {
        best = q;
        best_d = d;
      }
    }
    if (best >= 0) members[best].push_back(u);
  }

  for (int q = 0; q < s.num_clusters(); ++q) {
    auto& users = members[q];
    const ClusterLayout& layout = s.layouts[q];
    const auto cap = static_cast<size_t>(layout.dim);
    if (users.size() > cap) {
      std::stable_sort(users.begin(), users.end(), [&](int a, int b) {
        return cluster_gain(s, ch, a, q) > cluster_gain(s, ch, b, q);
      });
      users.resize(cap);
      std::sort(users.begin(), users.end());
    }
    if (users.empty()) continue;

    const auto k = static_cast<Eigen::Index>(users.size());
    ComplexMat h(k, layout.dim);  // rows h^H
    for (Eigen::Index i = 0; i < k; ++i) h.row(i) = ch.h(0, users[i], q).adjoint();
    ComplexMat gram = h * h.adjoint();
    Eigen::SelfAdjointEigenSolver<ComplexMat> eig(gram);
    const double top = eig.eigenvalues().maxCoeff();
    if (top <= 0.0) continue;
    if (eig.eigenvalues().minCoeff() <= 1e-8 * top) {
      out.rank_deficient = true;
      gram += ComplexMat::Identity(k, k) * (1e-8 * top);
    }
    ComplexMat w = h.adjoint() * gram.ldlt().solve(ComplexMat::Identity(k, k));
    for (Eigen::Index i = 0; i < k; ++i) {
      const double n = w.col(i).norm();
      if (n > 0.0) w.col(i) /= n;
    }
    // Equal power per user, the largest every BS cap allows.
    double p = std::numeric_limits<double>::infinity();
    for (const Block& blk : layout.blocks) {
      double used = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) used += w.col(i).segment(blk.offset, blk.size).squaredNorm();
      if (used > 0.0) p = std::min(p, s.base_stations[blk.bs].max_power_w / used);
    }
    if (!std::isfinite(p)) continue;
    for (Eigen::Index i = 0; i < k; ++i) {
      out.w(0, users[i], q) = w.col(i) * std::sqrt(p);
      out.z.serving[users[i]] = q;
    }
  }

  out.user_rates = user_rates(ch, out.w, out.z, U);

  // Fronthaul actually used: rates of the users each BS transmits to.
  const auto fh = s.fronthaul_caps_bpshz();
  std::vector<double> load(s.num_bs(), 0.0);
  for (int u = 0; u < U; ++u) {
    const int q = out.z.serving[u];
    if (q < 0) continue;
    const auto pw = block_powers(out.w(0, u, q), s.layouts[q]);
    for (size_t i = 0; i < pw.size(); ++i) {
      if (pw[i] > 0.0) load[s.layouts[q].blocks[i].bs] += out.user_rates[u];
    }
  }
  for (int b = 0; b < s.num_bs(); ++b) {
    out.fronthaul_residual = std::max(out.fronthaul_residual, (load[b] - fh[b]) / fh[b]);
  }

  TraceRow row;
  for (double r : out.user_rates) {
    row.sum_rate += r;
    if (r >= threshold) ++row.served_count;
  }
  row.f_fp = row.sum_rate;
  row.jain = jain_index(out.user_rates).value;
  row.served_fraction = served_fraction(out.user_rates, threshold);
  row.fronthaul_residual = out.fronthaul_residual;
  out.report = summarize({row}, out.user_rates, s.bandwidth_hz, 1e-4, 1e-6, threshold);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<TraceRow> trace_rows(const SumRateRun& run) {
  std::vector<TraceRow> rows;
  for (const SumRateIter& it : run.trace) {
    TraceRow r;
    r.iter = it.iter;
    r.f_fp = it.f_fp;
    r.sum_rate = it.sum_rate;
    r.power_residual = it.power_residual;
    r.fronthaul_residual = it.fronthaul_residual;
    r.served_count = it.served_count;
    r.jain = it.jain;
    r.served_fraction = it.served_fraction;
    r.inner_iters = it.solver_sweeps;
    r.excused = it.refresh_excused;
    rows.push_back(r);
  }
  return rows;
}

std::vector<TraceRow> trace_rows(const PfRun& run) {
  std::vector<TraceRow> rows;
  for (const PfSlot& slot : run.trace) rows.push_back(slot.row);
  return rows;
}

RunOutput run_algorithm(const ScenarioConfig& config, Algo algo, const RunOptions& opt) {
  RunOutput out;
  try {
    const Scenario s = build_scenario(config);
    const ChannelSet ch = draw_channel_set(s);
    switch (algo) {
      case Algo::kSumRate: {
        const auto& cfg = opt.sumrate;
        try {
          const SumRateRun run = run_sumrate(s, ch, cfg);
          out.trace = trace_rows(run);
          out.report = summarize(out.trace, run.user_rates, s.bandwidth_hz, cfg.tol, cfg.slack,
                                 cfg.serve_threshold);
          out.notes["converged"] = run.converged;
        } catch (const SolverFailure& e) {
          out.trace = trace_rows(e.partial());
          out.failed = true;
          out.error = e.what();
        }
        break;
      }
      case Algo::kPf: {
        const auto& cfg = opt.pf;
        const PfRun run = run_pf(s, ch, cfg);
        out.trace = trace_rows(run);
        out.report = summarize(out.trace, run.avg.rbar, s.bandwidth_hz, cfg.inner_tol, 1e-6,
                               cfg.serve_threshold);
        // Fairness of a PF run: per-slot Jain averaged over the slots.
        out.report.jain = run.mean_jain();
        out.report.jain_degenerate = false;
        double inst_served = 0.0;
        for (size_t t = 1; t < run.trace.size(); ++t) inst_served += run.trace[t].slot_served;
        if (run.trace.size() > 1) inst_served /= static_cast<double>(run.trace.size() - 1);
        out.notes["mean_slot_served_fraction"] = inst_served;
        break;
      }
      case Algo::kZf: {
        const ZfResult zf = baseline_zf(s, ch, opt.sumrate.serve_threshold);
        out.report = zf.report;
        TraceRow row;
        row.sum_rate = zf.report.sum_rate;
        row.f_fp = row.sum_rate;
        row.fronthaul_residual = zf.fronthaul_residual;
        row.served_count = static_cast<int>(std::lround(zf.report.served_fraction * s.num_users()));
        row.jain = zf.report.jain;
        row.served_fraction = zf.report.served_fraction;
        out.trace = {row};
        out.notes["rank_deficient"] = zf.rank_deficient;
        break;
      }
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

std::vector<JobResult> run_experiment(const ExperimentPreset& preset,
                                      const std::vector<std::uint64_t>& seeds,
                                      const RunOptions& options, unsigned threads) {
  check_preset(preset);
  const std::vector<double> values =
      preset.sweep == SweepVar::kNone ? std::vector<double>{0.0} : preset.values;

  std::vector<JobResult> jobs;
  std::vector<ScenarioConfig> configs;
  for (std::uint64_t seed : seeds) {
    for (const Arm& arm : preset.arms) {
      for (double v : values) {
        ScenarioConfig c = resolve_config(preset, arm, v);
        c.seed = seed;
        configs.push_back(c);
        JobResult j;
        j.variant = arm.variant;
        j.algo = arm.algo;
        j.sweep_value = v;
        j.seed = seed;
        jobs.push_back(std::move(j));
      }
    }
  }

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      jobs[i].output = run_algorithm(configs[i], jobs[i].algo, options);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return jobs;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string hex(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

nlohmann::json options_json(const RunOptions& o) {
  return {{"sumrate",
           {{"tol", o.sumrate.tol},
            {"max_iters", o.sumrate.max_iters},
            {"solver_tol", o.sumrate.solver_tol},
            {"epsilon", o.sumrate.epsilon},
            {"slack", o.sumrate.slack},
            {"serve_threshold", o.sumrate.serve_threshold}}},
          {"pf",
           {{"slots", o.pf.slots},
            {"eta_avg", o.pf.eta_avg},
            {"floor", o.pf.floor},
            {"inner_tol", o.pf.inner_tol},
            {"inner_max", o.pf.inner_max},
            {"solver_tol", o.pf.solver_tol},
            {"epsilon", o.pf.epsilon},
            {"serve_threshold", o.pf.serve_threshold}}}};
}

}  // namespace

std::string trace_csv_rows(const ExperimentPreset& preset, const JobResult& job) {
  std::string out;
  const std::string lead = preset.name + "," + to_string(job.algo) + "," + job.variant + "," +
                           to_string(preset.sweep) + "," + num(job.sweep_value) + "," +
                           std::to_string(job.seed) + ",";
  for (const TraceRow& r : job.output.trace) {
    out += lead + std::to_string(r.iter) + "," + num(r.f_fp) + "," + num(r.sum_rate) + "," +
           num(r.power_residual) + "," + num(r.fronthaul_residual) + "," +
           std::to_string(r.served_count) + "," + num(r.jain) + "," + num(r.served_fraction) + "," +
           num(r.sum_log_avg_rate) + "," + std::to_string(r.inner_iters) + "\n";
  }
  return out;
}

nlohmann::json summary_json(const ExperimentPreset& preset, const std::vector<JobResult>& jobs) {
  nlohmann::json runs = nlohmann::json::array();
  // Means per (variant, algo, sweep value), in first-seen order.
  struct Acc {
    std::string variant;
    Algo algo;
    double value;
    int n = 0;
    double sum_rate = 0.0, jain = 0.0, served = 0.0;
  };
  std::vector<Acc> acc;
  for (const JobResult& j : jobs) {
    nlohmann::json r = {{"variant", j.variant},
                        {"algo", to_string(j.algo)},
                        {"sweep_value", j.sweep_value},
                        {"seed", j.seed},
                        {"failed", j.output.failed},
                        {"metrics", to_json(j.output.report)},
                        {"notes", j.output.notes}};
    if (j.output.failed) r["error"] = j.output.error;
    runs.push_back(std::move(r));
    if (j.output.failed) continue;
    auto it = std::find_if(acc.begin(), acc.end(), [&](const Acc& a) {
      return a.variant == j.variant && a.algo == j.algo && a.value == j.sweep_value;
    });
    if (it == acc.end()) {
      acc.push_back({j.variant, j.algo, j.sweep_value});
      it = acc.end() - 1;
    }
    ++it->n;
    it->sum_rate += j.output.report.sum_rate;
    it->jain += j.output.report.jain;
    it->served += j.output.report.served_fraction;
  }
  nlohmann::json means = nlohmann::json::array();
  for (const Acc& a : acc) {
    means.push_back({{"variant", a.variant},
                     {"algo", to_string(a.algo)},
                     {"sweep_value", a.value},
                     {"runs", a.n},
                     {"sum_rate", a.sum_rate / a.n},
                     {"jain", a.jain / a.n},
                     {"served_fraction", a.served / a.n}});
  }
  return {{"preset", preset.name},
          {"sweep_var", to_string(preset.sweep)},
          {"runs", runs},
          {"means", means}};
}

nlohmann::json manifest_json(const ExperimentPreset& preset,
                             const std::vector<std::uint64_t>& seeds, const ArtifactInfo& info) {
  nlohmann::json arms = nlohmann::json::array();
  for (const Arm& a : preset.arms) {
    arms.push_back({{"variant", a.variant},
                    {"algo", to_string(a.algo)},
                    {"balloons", a.balloons},
                    {"cluster_size", a.cluster_size},
                    {"base", a.base ? to_json(*a.base) : nlohmann::json()}});
  }
  nlohmann::json resolved = nlohmann::json::array();
  const std::vector<double> values =
      preset.sweep == SweepVar::kNone ? std::vector<double>{0.0} : preset.values;
  for (const Arm& a : preset.arms) {
    for (double v : values) {
      resolved.push_back({{"variant", a.variant},
                          {"sweep_value", v},
                          {"config", to_json(resolve_config(preset, a, v))}});
    }
  }
  nlohmann::json hashed = {{"base", to_json(preset.base)},
                           {"sweep_var", to_string(preset.sweep)},
                           {"values", preset.values},
                           {"arms", arms},
                           {"options", options_json(info.options)}};
  return {{"preset", preset.name},
          {"description", preset.description},
          {"version", version()},
          {"config_hash", hex(fnv1a(hashed.dump()))},
          {"seeds", seeds},
          {"paper_scale", info.paper_scale},
          {"base_config", hashed["base"]},
          {"sweep_var", to_string(preset.sweep)},
          {"sweep_values", preset.values},
          {"arms", arms},
          {"resolved", resolved},
          {"options", hashed["options"]},
          {"argv", info.argv},
          {"timestamp", info.timestamp}};
}

std::vector<std::string> write_artifacts(const std::string& dir, const ExperimentPreset& preset,
                                         const std::vector<std::uint64_t>& seeds,
                                         const std::vector<JobResult>& jobs,
                                         const ArtifactInfo& info) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto write = [&](const std::string& name, const std::string& body) {
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << body;
    written.push_back(path);
  };
  for (std::uint64_t seed : seeds) {
    std::string body = std::string(kTraceHeader) + "\n";
    for (const JobResult& j : jobs) {
      if (j.seed == seed) body += trace_csv_rows(preset, j);
    }
    write("trace_seed_" + std::to_string(seed) + ".csv", body);
  }
  write("summary.json", summary_json(preset, jobs).dump(2) + "\n");
  write("manifest.json", manifest_json(preset, seeds, info).dump(2) + "\n");
  return written;
}

}  // namespace haps
