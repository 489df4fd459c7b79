#include "hbf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace hbf {

namespace {

constexpr int kSchemaVersion = 1;

std::string fmt(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

std::string seeds_to_string(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(seeds[i]);
  }
  return s;
}

// Every output file starts with a self-describing block: schema version,
// the fully resolved spec, and the seed list.
void write_header_block(std::ostream& out, const ExperimentSpec& spec, const std::string& command) {
  out << "# schema_version: " << kSchemaVersion << '\n';
  out << "# command: " << command << '\n';
  out << "# seeds: " << seeds_to_string(spec.seeds) << '\n';
  out << "# spec: " << spec_to_json(spec).dump() << '\n';
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::filesystem::path p = std::filesystem::path(dir) / name;
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

// Fixed task list, worker threads pulling indices; results land in
// preallocated slots so output order never depends on scheduling.
template <typename Task>
void run_parallel(int threads, int n_tasks, Task&& task) {
  int n_threads = threads == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : threads;
  n_threads = std::max(1, std::min(n_threads, n_tasks));
  if (n_threads == 1) {
    for (int i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

void ExperimentSpec::validate() const {
  channel.validate();
  trainer.validate();
  if (snr_grid.empty()) throw ContractViolation("ExperimentSpec: empty snr grid");
  if (agent_counts.empty()) throw ContractViolation("ExperimentSpec: empty agent counts");
  if (seeds.empty()) throw ContractViolation("ExperimentSpec: empty seed list");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ContractViolation("ExperimentSpec: seeds must be distinct");
  if (realizations < 1) throw ContractViolation("ExperimentSpec: realizations must be >= 1");
  if (baseline_draws < 1) throw ContractViolation("ExperimentSpec: baseline_draws must be >= 1");
  if (threads < 0) throw ContractViolation("ExperimentSpec: threads must be >= 0");
  if (channel.n_tx != trainer.n_tx)
    throw ContractViolation("ExperimentSpec: channel/trainer antenna mismatch");
  if (channel.n_users > trainer.n_rf)
    throw ContractViolation("ExperimentSpec: more users than RF chains");
}

ExperimentSpec desk_preset() {
  ExperimentSpec spec;
  spec.channel.n_tx = 16;
  spec.channel.n_users = 4;
  spec.trainer.n_tx = 16;
  spec.trainer.n_rf = 4;
  spec.trainer.n_agents = 2;
  spec.trainer.max_iters = 300;
  spec.trainer.snr_db = 5.0;
  spec.snr_grid = {0.0, 5.0, 10.0};
  spec.agent_counts = {1, 2, 3};
  spec.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  spec.realizations = 1;
  return spec;
}

ExperimentSpec paper_preset() {
  ExperimentSpec spec;
  spec.channel.n_tx = 64;
  spec.channel.n_users = 8;
  spec.trainer.n_tx = 64;
  spec.trainer.n_rf = 8;
  spec.trainer.n_agents = 2;
  spec.trainer.max_iters = 500;
  spec.trainer.snr_db = 5.0;
  spec.snr_grid = {-10.0, -5.0, 0.0, 5.0, 10.0};
  spec.agent_counts = {1, 2, 3};
  spec.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  spec.realizations = 1;
  return spec;
}

nlohmann::json spec_to_json(const ExperimentSpec& spec) {
  return nlohmann::json{{"channel", channel_config_to_json(spec.channel)},
                        {"trainer", trainer_config_to_json(spec.trainer)},
                        {"snr_grid", spec.snr_grid},
                        {"agent_counts", spec.agent_counts},
                        {"seeds", spec.seeds},
                        {"realizations", spec.realizations},
                        {"out_dir", spec.out_dir},
                        {"baseline_draws", spec.baseline_draws},
                        {"threads", spec.threads},
                        {"emit",
                         {{"rates_csv", spec.emit_rates_csv},
                          {"trace_csv", spec.emit_trace_csv},
                          {"timing_json", spec.emit_timing_json}}}};
}

void apply_json_overrides(ExperimentSpec& spec, const nlohmann::json& j) {
  if (j.contains("channel")) spec.channel = channel_config_from_json(j.at("channel"));
  if (j.contains("trainer")) {
    nlohmann::json merged = trainer_config_to_json(spec.trainer);
    merged.update(j.at("trainer"));
    spec.trainer = trainer_config_from_json(merged);
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("snr_grid", spec.snr_grid);
  get("agent_counts", spec.agent_counts);
  get("seeds", spec.seeds);
  get("realizations", spec.realizations);
  get("out_dir", spec.out_dir);
  get("baseline_draws", spec.baseline_draws);
  get("threads", spec.threads);
  if (j.contains("emit")) {
    const auto& e = j.at("emit");
    if (e.contains("rates_csv")) spec.emit_rates_csv = e.at("rates_csv").get<bool>();
    if (e.contains("trace_csv")) spec.emit_trace_csv = e.at("trace_csv").get<bool>();
    if (e.contains("timing_json")) spec.emit_timing_json = e.at("timing_json").get<bool>();
  }
}

ExperimentSpec spec_from_json(const nlohmann::json& j) {
  ExperimentSpec spec;
  apply_json_overrides(spec, j);
  return spec;
}

Rng point_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t folded = seed;
  folded = folded * 0x100000001B3ULL ^ (a + 0x9E3779B97F4A7C15ULL);
  folded = folded * 0x100000001B3ULL ^ (b + 0xC2B2AE3D27D4EB4FULL);
  folded = folded * 0x100000001B3ULL ^ (c + 0x165667B19E3779F9ULL);
  return Rng(folded);
}

SweepResult run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const auto n_snr = spec.snr_grid.size();
  const auto n_y = spec.agent_counts.size();
  const auto n_seed = spec.seeds.size();
  const auto n_real = static_cast<std::size_t>(spec.realizations);
  const int n_points = static_cast<int>(n_snr * n_y * n_seed * n_real);

  SweepResult result;
  result.rows.resize(static_cast<std::size_t>(n_points));

  run_parallel(spec.threads, n_points, [&](int idx) {
    const auto u = static_cast<std::size_t>(idx);
    const std::size_t si = u / (n_y * n_seed * n_real);
    const std::size_t yi = (u / (n_seed * n_real)) % n_y;
    const std::size_t ki = (u / n_real) % n_seed;
    const std::size_t ri = u % n_real;

    SweepRow row;
    row.snr_db = spec.snr_grid[si];
    row.agents = spec.agent_counts[yi];
    row.seed = spec.seeds[ki];
    row.realization = static_cast<int>(ri);

    TrainerConfig tc = spec.trainer;
    tc.snr_db = row.snr_db;
    tc.n_agents = row.agents;

    try {
      Rng ch_rng = point_rng(row.seed, si, ri, 1);
      ChannelMatrix h = generate_channel(spec.channel, ch_rng);

      Rng train_rng = point_rng(row.seed, si, yi * 1000 + ri, 2);
      EpisodeResult ep = train_episode(h, tc, train_rng);
      row.mahbf_rate = ep.final_best_rate();
      row.iteration1_rate = ep.iteration1_best_rate();
      row.iterations = ep.iterations_run;
      row.converged = ep.converged;
      row.failed = ep.diverged || !ep.best.has_value();

      RVector noise = RVector::Ones(spec.channel.n_users);
      Rng base_rng = point_rng(row.seed, si, ri, 3);
      double base_sum = 0.0;
      for (int d = 0; d < spec.baseline_draws; ++d)
        base_sum += random_phase_baseline(h, tc.n_rf, noise, tc.p_total(), base_rng).sum_rate;
      row.baseline_rate = base_sum / spec.baseline_draws;
      row.full_digital_rate = full_digital_zf_rate(h, noise, tc.p_total());
    } catch (const std::exception&) {
      row.failed = true;
    }
    result.rows[u] = std::move(row);
  });

  for (const auto& row : result.rows)
    if (row.failed) ++result.failed_points;

  if (spec.emit_rates_csv) {
    auto out = open_output(spec.out_dir, "sweep_rates.csv");
    write_header_block(out, spec, "sweep");
    out << "snr_db,agents,seed,realization,mahbf_rate,baseline_rate,full_digital_rate,"
           "iteration1_rate,iterations,converged,status\n";
    for (const auto& r : result.rows) {
      out << fmt(r.snr_db) << ',' << r.agents << ',' << r.seed << ',' << r.realization << ','
          << fmt(r.mahbf_rate) << ',' << fmt(r.baseline_rate) << ',' << fmt(r.full_digital_rate)
          << ',' << fmt(r.iteration1_rate) << ',' << r.iterations << ','
          << (r.converged ? 1 : 0) << ',' << (r.failed ? "failed" : "ok") << '\n';
    }
    // mean +/- std aggregate per (snr, Y) over seeds and realizations
    out << "# aggregate: snr_db,agents,mean_mahbf,std_mahbf,mean_baseline,mean_full_digital\n";
    for (std::size_t si = 0; si < n_snr; ++si) {
      for (std::size_t yi = 0; yi < n_y; ++yi) {
        std::vector<double> rates, base, full;
        for (const auto& r : result.rows) {
          if (r.snr_db == spec.snr_grid[si] && r.agents == spec.agent_counts[yi] && !r.failed) {
            rates.push_back(r.mahbf_rate);
            base.push_back(r.baseline_rate);
            full.push_back(r.full_digital_rate);
          }
        }
        if (rates.empty()) continue;
        double mean = 0.0;
        for (double v : rates) mean += v;
        mean /= static_cast<double>(rates.size());
        double var = 0.0;
        for (double v : rates) var += (v - mean) * (v - mean);
        var = rates.size() > 1 ? var / static_cast<double>(rates.size() - 1) : 0.0;
        double bmean = 0.0;
        for (double v : base) bmean += v;
        bmean /= static_cast<double>(base.size());
        double fmean = 0.0;
        for (double v : full) fmean += v;
        fmean /= static_cast<double>(full.size());
        out << "# " << fmt(spec.snr_grid[si]) << ',' << spec.agent_counts[yi] << ',' << fmt(mean)
            << ',' << fmt(std::sqrt(var)) << ',' << fmt(bmean) << ',' << fmt(fmean) << '\n';
      }
    }
    result.rates_csv_path =
        (std::filesystem::path(spec.out_dir) / "sweep_rates.csv").string();
  }
  return result;
}

std::vector<ConvergenceCase> ablation_cases(const TrainerConfig& base) {
  std::vector<ConvergenceCase> cases;
  TrainerConfig case1 = base;
  case1.prioritized_replay = false;
  case1.frequency_term = false;
  case1.predictive_reward = false;
  cases.push_back({"case1", case1});

  TrainerConfig case2 = base;
  case2.prioritized_replay = true;
  case2.frequency_term = true;
  case2.predictive_reward = false;
  cases.push_back({"case2", case2});

  TrainerConfig case3 = base;
  case3.prioritized_replay = true;
  case3.frequency_term = true;
  case3.predictive_reward = true;
  cases.push_back({"case3", case3});

  TrainerConfig single = case1;
  single.n_agents = 1;
  cases.push_back({"single_agent", single});
  return cases;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractViolation("median: empty input");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double ConvergenceResult::median_iterations(const std::string& case_name) const {
  std::vector<double> iters;
  for (const auto& run : runs)
    if (run.case_name == case_name) iters.push_back(static_cast<double>(run.iterations));
  return median(std::move(iters));
}

ConvergenceResult run_convergence(const ExperimentSpec& spec) {
  spec.validate();
  const auto cases = ablation_cases(spec.trainer);
  const auto n_seed = spec.seeds.size();
  const int n_points = static_cast<int>(cases.size() * n_seed);

  ConvergenceResult result;
  result.runs.resize(static_cast<std::size_t>(n_points));

  run_parallel(spec.threads, n_points, [&](int idx) {
    const auto u = static_cast<std::size_t>(idx);
    const std::size_t ci = u / n_seed;
    const std::size_t ki = u % n_seed;
    ConvergenceRun run;
    run.case_name = cases[ci].name;
    run.seed = spec.seeds[ki];
    try {
      // one channel per seed, shared by all cases for a paired comparison
      Rng ch_rng = point_rng(run.seed, 0, 0, 1);
      ChannelMatrix h = generate_channel(spec.channel, ch_rng);
      Rng train_rng = point_rng(run.seed, ci, 0, 2);
      EpisodeResult ep = train_episode(h, cases[ci].trainer, train_rng);
      run.iterations = ep.iterations_run;
      run.converged = ep.converged;
      run.final_rate = ep.final_best_rate();
      run.best_reward_per_iter.reserve(ep.trace.size());
      for (const auto& row : ep.trace)
        run.best_reward_per_iter.push_back(
            *std::max_element(row.raw_rewards.begin(), row.raw_rewards.end()));
      if (ep.diverged) run.iterations = -1;
    } catch (const std::exception&) {
      run.iterations = -1;
    }
    result.runs[u] = std::move(run);
  });

  for (const auto& run : result.runs)
    if (run.iterations < 0) ++result.failed_points;

  if (spec.emit_trace_csv) {
    auto traces = open_output(spec.out_dir, "convergence_traces.csv");
    write_header_block(traces, spec, "converge");
    traces << "seed,iter";
    for (const auto& c : cases) traces << ',' << c.name;
    traces << '\n';
    for (std::size_t ki = 0; ki < n_seed; ++ki) {
      std::size_t longest = 0;
      for (std::size_t ci = 0; ci < cases.size(); ++ci)
        longest = std::max(longest, result.runs[ci * n_seed + ki].best_reward_per_iter.size());
      for (std::size_t it = 0; it < longest; ++it) {
        traces << spec.seeds[ki] << ',' << (it + 1);
        for (std::size_t ci = 0; ci < cases.size(); ++ci) {
          const auto& series = result.runs[ci * n_seed + ki].best_reward_per_iter;
          traces << ',';
          if (it < series.size()) traces << fmt(series[it]);
        }
        traces << '\n';
      }
    }
    result.traces_csv_path =
        (std::filesystem::path(spec.out_dir) / "convergence_traces.csv").string();

    auto summary = open_output(spec.out_dir, "convergence_summary.csv");
    write_header_block(summary, spec, "converge");
    summary << "case,seed,iterations,converged,final_rate\n";
    for (const auto& run : result.runs)
      summary << run.case_name << ',' << run.seed << ',' << run.iterations << ','
              << (run.converged ? 1 : 0) << ',' << fmt(run.final_rate) << '\n';
    result.summary_csv_path =
        (std::filesystem::path(spec.out_dir) / "convergence_summary.csv").string();

    auto medians = open_output(spec.out_dir, "convergence_medians.csv");
    write_header_block(medians, spec, "converge");
    medians << "case,median_iterations,converged_fraction\n";
    for (const auto& c : cases) {
      std::vector<double> iters;
      int conv = 0;
      int total = 0;
      for (const auto& run : result.runs) {
        if (run.case_name != c.name || run.iterations < 0) continue;
        iters.push_back(static_cast<double>(run.iterations));
        conv += run.converged ? 1 : 0;
        ++total;
      }
      if (iters.empty()) continue;
      medians << c.name << ',' << fmt(median(iters)) << ','
              << fmt(total > 0 ? static_cast<double>(conv) / total : 0.0) << '\n';
    }
    result.medians_csv_path =
        (std::filesystem::path(spec.out_dir) / "convergence_medians.csv").string();
  }
  return result;
}

std::string hardware_descriptor() {
  std::string cpu = "unknown-cpu";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      auto pos = line.find(':');
      if (pos != std::string::npos) cpu = line.substr(pos + 2);
      break;
    }
  }
  return cpu + " / " + std::to_string(std::thread::hardware_concurrency()) + " hw threads";
}

TimingResult run_timing(const ExperimentSpec& spec) {
  spec.validate();
  const auto n_y = spec.agent_counts.size();
  const auto n_seed = spec.seeds.size();
  const int n_points = static_cast<int>(n_y * n_seed);

  struct PointResult {
    PhaseTimings timings;
    int iterations = 0;
    double rate = 0.0;
    bool failed = false;
  };
  std::vector<PointResult> points(static_cast<std::size_t>(n_points));

  // timing runs stay single-threaded per point so phase clocks are honest
  run_parallel(1, n_points, [&](int idx) {
    const auto u = static_cast<std::size_t>(idx);
    const std::size_t yi = u / n_seed;
    const std::size_t ki = u % n_seed;
    TrainerConfig tc = spec.trainer;
    tc.n_agents = spec.agent_counts[yi];
    try {
      Rng ch_rng = point_rng(spec.seeds[ki], 0, 0, 1);
      ChannelMatrix h = generate_channel(spec.channel, ch_rng);
      Rng train_rng = point_rng(spec.seeds[ki], yi, 0, 4);
      EpisodeResult ep = train_episode(h, tc, train_rng);
      points[u].timings = ep.timings;
      points[u].iterations = ep.iterations_run;
      points[u].rate = ep.final_best_rate();
      points[u].failed = ep.diverged;
    } catch (const std::exception&) {
      points[u].failed = true;
    }
  });

  TimingResult result;
  result.hardware = hardware_descriptor();
  for (std::size_t yi = 0; yi < n_y; ++yi) {
    std::vector<double> act, env, upd, tot, iters, rates;
    for (std::size_t ki = 0; ki < n_seed; ++ki) {
      const auto& p = points[yi * n_seed + ki];
      if (p.failed) {
        ++result.failed_points;
        continue;
      }
      act.push_back(p.timings.act_ms);
      env.push_back(p.timings.env_ms);
      upd.push_back(p.timings.update_ms);
      tot.push_back(p.timings.total_ms);
      iters.push_back(static_cast<double>(p.iterations));
      rates.push_back(p.rate);
    }
    if (act.empty()) continue;
    TimingPoint tp;
    tp.agents = spec.agent_counts[yi];
    tp.median_act_ms = median(act);
    tp.median_env_ms = median(env);
    tp.median_update_ms = median(upd);
    tp.median_total_ms = median(tot);
    tp.median_iterations = median(iters);
    tp.median_rate = median(rates);
    result.points.push_back(tp);
  }

  if (spec.emit_timing_json) {
    nlohmann::json per_y = nlohmann::json::array();
    for (const auto& p : result.points) {
      per_y.push_back(nlohmann::json{{"agents", p.agents},
                                     {"median_act_ms", p.median_act_ms},
                                     {"median_env_ms", p.median_env_ms},
                                     {"median_update_ms", p.median_update_ms},
                                     {"median_total_ms", p.median_total_ms},
                                     {"median_iterations", p.median_iterations},
                                     {"median_rate", p.median_rate}});
    }
    nlohmann::json j{
        {"schema_version", kSchemaVersion},
        {"hardware", result.hardware},
        {"note", "wall-clock milliseconds are hardware-bound and not comparable across machines; "
                 "iteration counts and rates are deterministic"},
        {"seeds", spec.seeds},
        {"spec", spec_to_json(spec)},
        {"per_agent_count", std::move(per_y)}};
    auto out = open_output(spec.out_dir, "timing.json");
    out << j.dump(2) << '\n';
    result.json_path = (std::filesystem::path(spec.out_dir) / "timing.json").string();
  }
  return result;
}

}  // namespace hbf
