// hbflab: experiment workbench around the hybrid-beamforming trainer.
//
// Subcommands:
//   sweep    rates over an SNR x agent-count grid vs the baselines
//   converge per-iteration reward traces for the ablation ladder
//   timing   per-phase wall clock and iteration medians per agent count
//   oracle   brute-force verification suites
//
// Precedence for settings: CLI flags > --config file > --preset defaults.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hbf/bench.hpp"
#include "hbf/oracles.hpp"

namespace {

struct CommonArgs {
  std::string preset = "desk";
  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  std::vector<double> snr;
  std::vector<int> agents;
  int threads = -1;
  int realizations = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--preset", args.preset, "Preset defaults: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--config", args.config_path, "JSON spec file overlaid on the preset");
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--seed", args.seeds, "Seed list")->delimiter(',');
  cmd->add_option("--snr", args.snr, "SNR grid in dB")->delimiter(',');
  cmd->add_option("--agents", args.agents, "Agent counts")->delimiter(',');
  cmd->add_option("--threads", args.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--realizations", args.realizations, "Channel realizations per point");
}

hbf::ExperimentSpec resolve_spec(const CommonArgs& args) {
  hbf::ExperimentSpec spec = args.preset == "paper" ? hbf::paper_preset() : hbf::desk_preset();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw std::runtime_error("cannot read config file: " + args.config_path);
    nlohmann::json j = nlohmann::json::parse(in);
    hbf::apply_json_overrides(spec, j);
  }
  if (!args.out_dir.empty()) spec.out_dir = args.out_dir;
  if (!args.seeds.empty()) spec.seeds = args.seeds;
  if (!args.snr.empty()) spec.snr_grid = args.snr;
  if (!args.agents.empty()) spec.agent_counts = args.agents;
  if (args.threads >= 0) spec.threads = args.threads;
  if (args.realizations >= 1) spec.realizations = args.realizations;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid beamforming multi-agent RL workbench"};
  app.require_subcommand(1);

  CommonArgs sweep_args, conv_args, timing_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Rate sweep over SNR and agent counts");
  add_common(sweep_cmd, sweep_args);
  auto* conv_cmd = app.add_subcommand("converge", "Ablation convergence traces");
  add_common(conv_cmd, conv_args);
  auto* timing_cmd = app.add_subcommand("timing", "Per-phase timing report");
  add_common(timing_cmd, timing_args);

  std::uint64_t oracle_seed = 12345;
  auto* oracle_cmd = app.add_subcommand("oracle", "Run the brute-force verification suites");
  oracle_cmd->add_option("--seed", oracle_seed, "Oracle RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep_cmd->parsed()) {
      hbf::ExperimentSpec spec = resolve_spec(sweep_args);
      hbf::SweepResult res = hbf::run_sweep(spec);
      std::cout << "sweep: " << res.rows.size() << " points, " << res.failed_points
                << " failed -> " << res.rates_csv_path << '\n';
      return res.failed_points == 0 ? 0 : 1;
    }
    if (conv_cmd->parsed()) {
      hbf::ExperimentSpec spec = resolve_spec(conv_args);
      hbf::ConvergenceResult res = hbf::run_convergence(spec);
      std::cout << "converge: " << res.runs.size() << " runs, " << res.failed_points
                << " failed -> " << res.summary_csv_path << '\n';
      for (const auto& name : {"case1", "case2", "case3", "single_agent"})
        std::cout << "  median iterations " << name << ": " << res.median_iterations(name)
                  << '\n';
      return res.failed_points == 0 ? 0 : 1;
    }
    if (timing_cmd->parsed()) {
      hbf::ExperimentSpec spec = resolve_spec(timing_args);
      hbf::TimingResult res = hbf::run_timing(spec);
      std::cout << "timing on " << res.hardware << " -> " << res.json_path << '\n';
      std::cout << "  (milliseconds are hardware-bound; compare iteration medians only)\n";
      for (const auto& p : res.points)
        std::cout << "  Y=" << p.agents << ": median " << p.median_total_ms << " ms/episode, "
                  << p.median_iterations << " iterations to convergence\n";
      return res.failed_points == 0 ? 0 : 1;
    }
    if (oracle_cmd->parsed()) {
      bool ok = hbf::oracles::run_all(std::cout, oracle_seed);
      std::cout << (ok ? "all oracle suites passed\n" : "oracle suite FAILED\n");
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
