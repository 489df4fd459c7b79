#ifndef HBF_BENCH_HPP
#define HBF_BENCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hbf/channel.hpp"
#include "hbf/madrl.hpp"

#include <json.hpp>

namespace hbf {

struct ExperimentSpec {
  ChannelConfig channel;
  TrainerConfig trainer;
  std::vector<double> snr_grid{0.0, 5.0, 10.0};
  std::vector<int> agent_counts{1, 2, 3};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int realizations = 1;
  std::string out_dir = "out";
  int baseline_draws = 20;
  int threads = 1;  // 0 means hardware concurrency
  bool emit_rates_csv = true;
  bool emit_trace_csv = true;
  bool emit_timing_json = true;

  void validate() const;
};

/// Desk-scale preset: N_t=16, K=N_RF=4, small enough that the full
/// acceptance suite runs in minutes while keeping K <= N_RF < N_t.
ExperimentSpec desk_preset();
/// Full-scale preset mirroring the reference configuration (N_t=64, K=8).
ExperimentSpec paper_preset();

nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j);
/// Overlays the fields present in j onto spec (config-file semantics).
void apply_json_overrides(ExperimentSpec& spec, const nlohmann::json& j);

/// Deterministic per-point stream: folds the indices into the seed.
Rng point_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

struct SweepRow {
  double snr_db = 0.0;
  int agents = 0;
  std::uint64_t seed = 0;
  int realization = 0;
  double mahbf_rate = 0.0;
  double baseline_rate = 0.0;  // mean over baseline_draws random-phase draws
  double full_digital_rate = 0.0;
  double iteration1_rate = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  int failed_points = 0;
  std::string rates_csv_path;
};

/// Trains one episode per (SNR, Y, seed, realization) grid point and records
/// the learned rate next to the random-phase and full-digital references.
/// Deterministic for a fixed spec, regardless of thread count.
SweepResult run_sweep(const ExperimentSpec& spec);

struct ConvergenceCase {
  std::string name;
  TrainerConfig trainer;
};

/// The ablation ladder: multi-agent only, + prioritized replay, + predictive
/// reward, and the single-agent reference without any of the improvements.
std::vector<ConvergenceCase> ablation_cases(const TrainerConfig& base);

struct ConvergenceRun {
  std::string case_name;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  double final_rate = 0.0;
  std::vector<double> best_reward_per_iter;
};

struct ConvergenceResult {
  std::vector<ConvergenceRun> runs;
  int failed_points = 0;
  std::string traces_csv_path;
  std::string summary_csv_path;
  std::string medians_csv_path;

  double median_iterations(const std::string& case_name) const;
};

/// One episode per (case, seed) on a per-seed channel shared across cases,
/// recording per-iteration best rewards and iterations-to-convergence.
ConvergenceResult run_convergence(const ExperimentSpec& spec);

struct TimingPoint {
  int agents = 0;
  double median_act_ms = 0.0;
  double median_env_ms = 0.0;
  double median_update_ms = 0.0;
  double median_total_ms = 0.0;
  double median_iterations = 0.0;
  double median_rate = 0.0;
};

struct TimingResult {
  std::vector<TimingPoint> points;
  int failed_points = 0;
  std::string json_path;
  std::string hardware;
};

/// Wall-clock per phase, medians over seeds, per agent count. Absolute
/// milliseconds are hardware-bound and explicitly labeled as such in the
/// report; iteration counts and rates are deterministic.
TimingResult run_timing(const ExperimentSpec& spec);

std::string hardware_descriptor();
double median(std::vector<double> values);

}  // namespace hbf

#endif
