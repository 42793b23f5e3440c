// Command-line front end: haps run --preset fig2-desk --seeds 10 --out out/

#include "haps/harness.hpp"

#include "CLI11.hpp"

#include <ctime>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunArgs {
  std::string preset;
  std::string config;
  std::string algo;
  int seeds = 0;
  int tones = 0;
  std::string out;
  bool paper_scale = false;
  std::optional<double> tol;
  unsigned jobs = 0;
};

int do_run(const RunArgs& a, const std::vector<std::string>& argv) {
  using namespace haps;
  if (a.preset.empty() && a.config.empty()) {
    std::cerr << "error: give --preset, --config or both\n";
    return 2;
  }

  ExperimentPreset preset;
  try {
    if (!a.preset.empty()) {
      preset = find_preset(a.preset, a.paper_scale);
    } else {
      preset.name = "custom";
      preset.description = "single configuration from " + a.config;
      Arm arm;
      arm.variant = "config";
      preset.arms = {arm};
      preset.seeds = 1;
    }
    if (!a.config.empty()) {
      preset.base = load_config(a.config);
      for (Arm& arm : preset.arms) arm.base.reset();
    }
    if (!a.algo.empty()) {
      const Algo algo = parse_algo(a.algo);
      for (Arm& arm : preset.arms) arm.algo = algo;
    }
    if (a.tones > 0) {
      preset.base.tones = a.tones;
      for (Arm& arm : preset.arms) {
        if (arm.base) arm.base->tones = a.tones;
      }
      if (preset.sweep == SweepVar::kTones) preset.values = {static_cast<double>(a.tones)};
    }
    if (a.seeds > 0) preset.seeds = a.seeds;
    check_preset(preset);
    // Every job config must be valid before anything runs.
    const std::vector<double> values =
        preset.sweep == SweepVar::kNone ? std::vector<double>{0.0} : preset.values;
    for (const Arm& arm : preset.arms) {
      for (double v : values) validate(resolve_config(preset, arm, v));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error:\n" << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  RunOptions options;
  if (a.tol) {
    options.sumrate.tol = *a.tol;
    options.pf.inner_tol = *a.tol;
  }
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < preset.seeds; ++k) seeds.push_back(preset.base.seed + static_cast<std::uint64_t>(k));

  const auto jobs = run_experiment(preset, seeds, options, a.jobs);

  ArtifactInfo info;
  info.argv = argv;
  info.timestamp = utc_now();
  info.options = options;
  info.paper_scale = a.paper_scale;
  std::vector<std::string> files;
  try {
    files = write_artifacts(a.out, preset, seeds, jobs, info);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  int failed = 0;
  for (const JobResult& j : jobs) {
    if (!j.output.failed) continue;
    ++failed;
    std::cerr << "run failed: " << j.variant << " " << to_string(j.algo) << " value "
              << j.sweep_value << " seed " << j.seed << ": " << j.output.error << "\n";
  }
  std::cout << preset.name << ": " << jobs.size() << " runs, " << failed << " failed, "
            << files.size() << " files in " << a.out << "\n";
  return failed > 0 ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-tier network MIMO simulator"};
  app.require_subcommand(1);

  RunArgs args;
  auto* run = app.add_subcommand("run", "run a preset or a config and write traces");
  run->add_option("--preset", args.preset, "built-in experiment (see `presets`)");
  run->add_option("--config", args.config, "scenario JSON")->check(CLI::ExistingFile);
  run->add_option("--algo", args.algo, "sumrate, pf or zf")
      ->check(CLI::IsMember({"sumrate", "pf", "zf", "zf-baseline"}));
  run->add_option("--seeds", args.seeds, "number of seeds (from the config seed up)")
      ->check(CLI::PositiveNumber);
  run->add_option("--tones", args.tones, "OFDMA tones")->check(CLI::PositiveNumber);
  run->add_option("--out", args.out, "output directory")->required();
  run->add_flag("--paper-scale", args.paper_scale, "full-size presets");
  run->add_option("--tol", args.tol, "relative stopping tolerance")->check(CLI::PositiveNumber);
  run->add_option("--jobs", args.jobs, "worker threads (0 = all cores)");

  bool paper = false;
  auto* list = app.add_subcommand("presets", "list the built-in presets");
  list->add_flag("--paper-scale", paper);

  CLI11_PARSE(app, argc, argv);

  if (*list) {
    for (const auto& p : haps::builtin_presets(paper)) {
      std::cout << p.name << "  " << p.description << " (sweep " << haps::to_string(p.sweep)
                << ", " << p.arms.size() << " arms, " << p.seeds << " seeds)\n";
    }
    return 0;
  }
  return do_run(args, std::vector<std::string>(argv, argv + argc));
}
