#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hbf/bench.hpp"

using namespace hbf;

namespace {

ExperimentSpec tiny_spec(const std::string& out_dir) {
  ExperimentSpec spec;
  spec.channel.n_tx = 4;
  spec.channel.n_users = 2;
  spec.channel.n_clusters = 2;
  spec.channel.n_rays = 2;
  spec.trainer.n_tx = 4;
  spec.trainer.n_rf = 2;
  spec.trainer.n_agents = 2;
  spec.trainer.hidden1 = 8;
  spec.trainer.hidden2 = 8;
  spec.trainer.max_iters = 10;
  spec.trainer.buffer_capacity = 32;
  spec.trainer.minibatch = 8;
  spec.snr_grid = {5.0};
  spec.agent_counts = {1, 2};
  spec.seeds = {1, 2};
  spec.baseline_draws = 5;
  spec.out_dir = out_dir;
  return spec;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("one-point sweep emits exactly one data row with the header block") {
  TempDir dir("hbf_test_sweep_one");
  ExperimentSpec spec = tiny_spec(dir.path.string());
  spec.agent_counts = {2};
  spec.seeds = {1};
  SweepResult res = run_sweep(spec);
  CHECK(res.rows.size() == 1);
  CHECK(res.failed_points == 0);

  std::string body = slurp(res.rates_csv_path);
  CHECK(body.find("# schema_version: 1") != std::string::npos);
  CHECK(body.find("# spec: ") != std::string::npos);
  CHECK(body.find("# seeds: 1") != std::string::npos);
  int data_rows = 0;
  std::istringstream lines(body);
  std::string line;
  bool in_data = false;
  while (std::getline(lines, line)) {
    if (line.rfind("snr_db,", 0) == 0) {
      in_data = true;
      continue;
    }
    if (in_data && !line.empty() && line[0] != '#') ++data_rows;
  }
  CHECK(data_rows == 1);
}

TEST_CASE("sweep determinism: identical spec gives byte-identical files") {
  TempDir dir1("hbf_test_sweep_a");
  TempDir dir2("hbf_test_sweep_b");
  ExperimentSpec s1 = tiny_spec(dir1.path.string());
  ExperimentSpec s2 = tiny_spec(dir2.path.string());
  SweepResult r1 = run_sweep(s1);
  SweepResult r2 = run_sweep(s2);
  std::string a = slurp(r1.rates_csv_path);
  std::string b = slurp(r2.rates_csv_path);
  // the spec line embeds out_dir; compare everything else
  auto strip_spec_line = [](const std::string& s) {
    std::istringstream in(s);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
      if (line.rfind("# spec:", 0) != 0) out << line << '\n';
    return out.str();
  };
  CHECK(strip_spec_line(a) == strip_spec_line(b));
}

TEST_CASE("sweep respects the full-digital upper bound on every row") {
  TempDir dir("hbf_test_sweep_bound");
  ExperimentSpec spec = tiny_spec(dir.path.string());
  SweepResult res = run_sweep(spec);
  for (const auto& row : res.rows) {
    CHECK_FALSE(row.failed);
    CHECK(row.mahbf_rate >= 0.0);
    CHECK(row.full_digital_rate >= row.mahbf_rate - 1e-9);
    CHECK(row.full_digital_rate >= row.baseline_rate - 1e-9);
  }
}

TEST_CASE("parallel sweep matches the single-threaded result") {
  TempDir dir1("hbf_test_sweep_seq");
  TempDir dir2("hbf_test_sweep_par");
  ExperimentSpec s1 = tiny_spec(dir1.path.string());
  ExperimentSpec s2 = tiny_spec(dir2.path.string());
  s2.threads = 4;
  SweepResult r1 = run_sweep(s1);
  SweepResult r2 = run_sweep(s2);
  REQUIRE(r1.rows.size() == r2.rows.size());
  for (std::size_t i = 0; i < r1.rows.size(); ++i) {
    CHECK(r1.rows[i].mahbf_rate == r2.rows[i].mahbf_rate);
    CHECK(r1.rows[i].baseline_rate == r2.rows[i].baseline_rate);
    CHECK(r1.rows[i].iterations == r2.rows[i].iterations);
  }
}

TEST_CASE("convergence traces stay within the iteration cap per case") {
  TempDir dir("hbf_test_conv");
  ExperimentSpec spec = tiny_spec(dir.path.string());
  ConvergenceResult res = run_convergence(spec);
  CHECK(res.failed_points == 0);
  CHECK(res.runs.size() == 4 * spec.seeds.size());
  for (const auto& run : res.runs) {
    CHECK(static_cast<int>(run.best_reward_per_iter.size()) <= spec.trainer.max_iters);
    CHECK(run.iterations <= spec.trainer.max_iters);
    CHECK(run.iterations >= 1);
  }
  // labeled case columns present in the trace file
  std::string traces = slurp(res.traces_csv_path);
  CHECK(traces.find("seed,iter,case1,case2,case3,single_agent") != std::string::npos);
  std::string medians = slurp(res.medians_csv_path);
  CHECK(medians.find("case,median_iterations") != std::string::npos);
  // medians are queryable per case
  CHECK(res.median_iterations("case1") >= 1.0);
  CHECK(res.median_iterations("single_agent") >= 1.0);
}

TEST_CASE("ablation cases toggle exactly the intended flags") {
  TrainerConfig base;
  base.prioritized_replay = true;
  base.frequency_term = true;
  base.predictive_reward = true;
  auto cases = ablation_cases(base);
  REQUIRE(cases.size() == 4);
  CHECK(cases[0].name == "case1");
  CHECK_FALSE(cases[0].trainer.prioritized_replay);
  CHECK_FALSE(cases[0].trainer.predictive_reward);
  CHECK(cases[0].trainer.n_agents == base.n_agents);
  CHECK(cases[1].name == "case2");
  CHECK(cases[1].trainer.prioritized_replay);
  CHECK_FALSE(cases[1].trainer.predictive_reward);
  CHECK(cases[2].name == "case3");
  CHECK(cases[2].trainer.prioritized_replay);
  CHECK(cases[2].trainer.predictive_reward);
  CHECK(cases[3].name == "single_agent");
  CHECK(cases[3].trainer.n_agents == 1);
  CHECK_FALSE(cases[3].trainer.prioritized_replay);
  CHECK_FALSE(cases[3].trainer.predictive_reward);
}

TEST_CASE("convergence determinism across runs") {
  TempDir dir1("hbf_test_conv_a");
  TempDir dir2("hbf_test_conv_b");
  ExperimentSpec s1 = tiny_spec(dir1.path.string());
  ExperimentSpec s2 = tiny_spec(dir2.path.string());
  ConvergenceResult r1 = run_convergence(s1);
  ConvergenceResult r2 = run_convergence(s2);
  REQUIRE(r1.runs.size() == r2.runs.size());
  for (std::size_t i = 0; i < r1.runs.size(); ++i) {
    CHECK(r1.runs[i].iterations == r2.runs[i].iterations);
    CHECK(r1.runs[i].final_rate == r2.runs[i].final_rate);
    CHECK(r1.runs[i].best_reward_per_iter == r2.runs[i].best_reward_per_iter);
  }
}

TEST_CASE("timing report accounts for its phases and names the hardware") {
  TempDir dir("hbf_test_timing");
  ExperimentSpec spec = tiny_spec(dir.path.string());
  spec.agent_counts = {1, 2};
  TimingResult res = run_timing(spec);
  CHECK_FALSE(res.hardware.empty());
  REQUIRE(res.points.size() == 2);
  for (const auto& p : res.points) {
    double phases = p.median_act_ms + p.median_env_ms + p.median_update_ms;
    CHECK(phases <= p.median_total_ms * 1.05);
    CHECK(p.median_iterations >= 1.0);
  }

  std::string body = slurp(res.json_path);
  nlohmann::json j = nlohmann::json::parse(body);
  CHECK(j.at("hardware").get<std::string>() == res.hardware);
  CHECK(j.at("note").get<std::string>().find("not comparable") != std::string::npos);
  CHECK(j.at("per_agent_count").size() == 2);
}

TEST_CASE("spec json round trip and config overrides") {
  ExperimentSpec spec = tiny_spec("somewhere");
  nlohmann::json j = spec_to_json(spec);
  ExperimentSpec back = spec_from_json(j);
  CHECK(back.trainer.n_tx == 4);
  CHECK(back.snr_grid == spec.snr_grid);
  CHECK(back.seeds == spec.seeds);
  CHECK(back.out_dir == "somewhere");

  // partial override keeps everything else
  nlohmann::json override_json{{"trainer", {{"eta", 0.5}}}, {"snr_grid", {1.0, 2.0}}};
  apply_json_overrides(back, override_json);
  CHECK(back.trainer.eta == doctest::Approx(0.5));
  CHECK(back.trainer.n_tx == 4);
  CHECK(back.snr_grid == std::vector<double>{1.0, 2.0});

  ExperimentSpec bad = spec;
  bad.seeds = {1, 1};
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("presets keep the structural constraint K <= N_RF < N_t") {
  ExperimentSpec desk = desk_preset();
  CHECK(desk.channel.n_users <= desk.trainer.n_rf);
  CHECK(desk.trainer.n_rf < desk.trainer.n_tx);
  CHECK(desk.trainer.n_tx == 16);
  CHECK(desk.seeds.size() == 10);
  desk.validate();

  ExperimentSpec paper = paper_preset();
  CHECK(paper.trainer.n_tx == 64);
  CHECK(paper.channel.n_users == 8);
  CHECK(paper.trainer.n_rf == 8);
  paper.validate();
}

TEST_CASE("median helper") {
  CHECK(median({3.0, 1.0, 2.0}) == doctest::Approx(2.0));
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == doctest::Approx(2.5));
  CHECK_THROWS_AS(median({}), ContractViolation);
}
