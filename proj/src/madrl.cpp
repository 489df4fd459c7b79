#include "hbf/madrl.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <numbers>
#include <set>

namespace hbf {

namespace {

constexpr double kPi = std::numbers::pi;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

void TrainerConfig::validate() const {
  if (n_agents < 1) throw ContractViolation("TrainerConfig: n_agents must be >= 1");
  if (n_tx < 1 || n_rf < 1) throw ContractViolation("TrainerConfig: array dims must be >= 1");
  if (n_agents > action_dim())
    throw ContractViolation("TrainerConfig: more agents than orthogonal directions");
  if (max_iters < 1) throw ContractViolation("TrainerConfig: max_iters must be >= 1");
  if (gamma < 0.0 || gamma >= 1.0) throw ContractViolation("TrainerConfig: gamma outside [0, 1)");
  if (tau <= 0.0 || tau > 1.0) throw ContractViolation("TrainerConfig: tau outside (0, 1]");
  if (tau_thres <= 0.0) throw ContractViolation("TrainerConfig: tau_thres must be > 0");
  if (eta < 0.0) throw ContractViolation("TrainerConfig: eta must be >= 0");
  if (delta <= 0.0) throw ContractViolation("TrainerConfig: delta must be > 0");
  if (minibatch < 1) throw ContractViolation("TrainerConfig: minibatch must be >= 1");
  if (buffer_capacity < 1) throw ContractViolation("TrainerConfig: buffer capacity must be >= 1");
  if (lr <= 0.0) throw ContractViolation("TrainerConfig: lr must be > 0");
  if (noise_std < 0.0 || noise_decay < 0.0 || noise_decay > 1.0 || noise_floor < 0.0)
    throw ContractViolation("TrainerConfig: bad noise schedule");
  if (grad_clip < 0.0) throw ContractViolation("TrainerConfig: grad_clip must be >= 0");
  if (hidden1 < 1 || hidden2 < 1) throw ContractViolation("TrainerConfig: hidden widths must be >= 1");
  if (init_retries < 1) throw ContractViolation("TrainerConfig: init_retries must be >= 1");
}

double TrainerConfig::p_total() const { return std::pow(10.0, snr_db / 10.0); }

nlohmann::json trainer_config_to_json(const TrainerConfig& c) {
  return nlohmann::json{{"n_agents", c.n_agents},
                        {"n_tx", c.n_tx},
                        {"n_rf", c.n_rf},
                        {"max_iters", c.max_iters},
                        {"gamma", c.gamma},
                        {"tau", c.tau},
                        {"tau_thres", c.tau_thres},
                        {"eta", c.eta},
                        {"delta", c.delta},
                        {"minibatch", c.minibatch},
                        {"buffer_capacity", c.buffer_capacity},
                        {"lr", c.lr},
                        {"lr_actor", c.lr_actor},
                        {"lr_critic", c.lr_critic},
                        {"lr_predictive", c.lr_predictive},
                        {"noise_std", c.noise_std},
                        {"noise_decay", c.noise_decay},
                        {"noise_floor", c.noise_floor},
                        {"grad_clip", c.grad_clip},
                        {"snr_db", c.snr_db},
                        {"hidden1", c.hidden1},
                        {"hidden2", c.hidden2},
                        {"reward_p_squared", c.reward_p_squared},
                        {"prioritized_replay", c.prioritized_replay},
                        {"frequency_term", c.frequency_term},
                        {"predictive_reward", c.predictive_reward},
                        {"coupled_critic_gradient", c.coupled_critic_gradient},
                        {"normalize_root_by_occupancy", c.normalize_root_by_occupancy},
                        {"init_retries", c.init_retries}};
}

TrainerConfig trainer_config_from_json(const nlohmann::json& j) {
  TrainerConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_agents", c.n_agents);
  get("n_tx", c.n_tx);
  get("n_rf", c.n_rf);
  get("max_iters", c.max_iters);
  get("gamma", c.gamma);
  get("tau", c.tau);
  get("tau_thres", c.tau_thres);
  get("eta", c.eta);
  get("delta", c.delta);
  get("minibatch", c.minibatch);
  get("buffer_capacity", c.buffer_capacity);
  get("lr", c.lr);
  get("lr_actor", c.lr_actor);
  get("lr_critic", c.lr_critic);
  get("lr_predictive", c.lr_predictive);
  get("noise_std", c.noise_std);
  get("noise_decay", c.noise_decay);
  get("noise_floor", c.noise_floor);
  get("grad_clip", c.grad_clip);
  get("snr_db", c.snr_db);
  get("hidden1", c.hidden1);
  get("hidden2", c.hidden2);
  get("reward_p_squared", c.reward_p_squared);
  get("prioritized_replay", c.prioritized_replay);
  get("frequency_term", c.frequency_term);
  get("predictive_reward", c.predictive_reward);
  get("coupled_critic_gradient", c.coupled_critic_gradient);
  get("normalize_root_by_occupancy", c.normalize_root_by_occupancy);
  get("init_retries", c.init_retries);
  return c;
}

CentralNets make_central_nets(const TrainerConfig& cfg, Rng& rng) {
  const int nd = cfg.action_dim();
  std::array<int, 4> dims{2 * nd, cfg.hidden1, cfg.hidden2, 1};
  MlpParams critic = make_mlp(dims, rng);
  MlpParams predictive = make_mlp(dims, rng);
  return CentralNets{critic, critic, predictive, predictive};
}

std::vector<Agent> init_agents(const TrainerConfig& cfg, Rng& rng) {
  cfg.validate();
  const int nd = cfg.action_dim();
  const int y = cfg.n_agents;

  std::vector<CVector> ortho;
  for (int attempt = 0; attempt < cfg.init_retries; ++attempt) {
    std::vector<CVector> raw;
    raw.reserve(static_cast<std::size_t>(y));
    for (int i = 0; i < y; ++i) {
      CVector v(nd);
      for (int m = 0; m < nd; ++m) v(m) = std::polar(1.0, rng.uniform(-kPi, kPi));
      raw.push_back(std::move(v));
    }
    try {
      ortho = gram_schmidt_orthogonalize(raw);
      break;
    } catch (const SingularSystemError&) {
      ortho.clear();  // redraw
    }
  }
  if (ortho.empty()) throw SingularSystemError("init_agents: orthogonalization kept failing");

  std::vector<Agent> agents;
  agents.reserve(static_cast<std::size_t>(y));
  std::array<int, 4> actor_dims{nd, cfg.hidden1, cfg.hidden2, nd};
  for (int i = 0; i < y; ++i) {
    RVector state(nd);
    for (int m = 0; m < nd; ++m) state(m) = std::arg(ortho[static_cast<std::size_t>(i)](m));
    MlpParams actor = make_mlp(actor_dims, rng);
    agents.push_back(Agent{i, actor, actor, SumTree(cfg.buffer_capacity), state,
                           AnalogPrecoder::from_phase_vector(state, cfg.n_tx, cfg.n_rf),
                           RVector{}, RVector{}, std::nullopt, 0.0});
  }
  return agents;
}

RVector critic_input(const RVector& state, const RVector& action) {
  if (state.size() != action.size()) throw ContractViolation("critic_input: length mismatch");
  RVector x(state.size() + action.size());
  x << state / kPi, action / kPi;
  return x;
}

RVector act(const Agent& agent, double noise_std, Rng& rng) {
  RVector a = kPi * forward(agent.actor, RVector(agent.state / kPi));
  if (noise_std > 0.0)
    for (Eigen::Index m = 0; m < a.size(); ++m) a(m) += rng.normal(0.0, noise_std);
  for (Eigen::Index m = 0; m < a.size(); ++m) a(m) = wrap_phase(a(m));
  return a;
}

EnvStep env_step(const ChannelMatrix& h, const RVector& action, const TrainerConfig& cfg) {
  if (action.size() != cfg.action_dim())
    throw ContractViolation("env_step: action length != n_tx*n_rf");
  AnalogPrecoder analog = AnalogPrecoder::from_phase_vector(action, cfg.n_tx, cfg.n_rf);
  const int k = h.n_users();
  RVector noise = RVector::Ones(k);
  try {
    CMatrix f_tilde = zf_digital(h, analog);
    RVector gains = effective_gains(f_tilde, analog);
    PowerAllocation pa = water_filling(gains, noise, cfg.p_total());
    CMatrix f_d = assemble_digital(f_tilde, pa);
    double rate = zf_sum_rate(pa);
    double reward = cfg.reward_p_squared ? zf_sum_rate(pa, true) : rate;
    return EnvStep{reward, HybridSolution{std::move(analog), std::move(f_d), std::move(pa), rate, false}};
  } catch (const DegenerateGeometryError&) {
    PowerAllocation pa{RVector::Zero(k), RVector::Ones(k), noise, 0.0};
    HybridSolution sol{std::move(analog), CMatrix::Zero(cfg.n_rf, k), std::move(pa), 0.0, true};
    return EnvStep{0.0, std::move(sol)};
  }
}

double shape_reward(double raw, double sigma_pred, double eta) {
  if (eta < 0.0) throw ContractViolation("shape_reward: eta must be >= 0");
  return raw + eta * sigma_pred;
}

double critic_target(double reward, const RVector& next_state, const Agent& agent,
                     const CentralNets& nets, double gamma) {
  RVector a_next = kPi * forward(agent.target_actor, RVector(next_state / kPi));
  double q_next = forward(nets.target_critic, critic_input(next_state, a_next))(0);
  return reward + gamma * q_next;
}

namespace {

int total_count(const AgentSamples& samples) {
  int m = 0;
  for (const auto& s : samples) m += static_cast<int>(s.size());
  return m;
}

// Critic/predictive inputs for every sample, one column per sample, with the
// owning agent's weight alongside.
struct FlatBatch {
  RMatrix inputs;               // 2*nd x M
  std::vector<double> weights;  // q_{i(m)}
  std::vector<double> rewards;
  std::vector<int> owner;
};

FlatBatch flatten(const std::vector<Agent>& agents, const AgentSamples& samples,
                  const std::vector<double>& q) {
  const int m_total = total_count(samples);
  FlatBatch b;
  if (m_total == 0) return b;
  const Eigen::Index width = 2 * agents.front().state.size();
  b.inputs.resize(width, m_total);
  b.weights.reserve(static_cast<std::size_t>(m_total));
  b.rewards.reserve(static_cast<std::size_t>(m_total));
  b.owner.reserve(static_cast<std::size_t>(m_total));
  int col = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (const auto& s : samples[i]) {
      b.inputs.col(col) = critic_input(s.transition.state, s.transition.action);
      b.weights.push_back(q[i]);
      b.rewards.push_back(s.transition.reward);
      b.owner.push_back(static_cast<int>(i));
      ++col;
    }
  }
  return b;
}

}  // namespace

double update_critic(CentralNets& nets, const std::vector<Agent>& agents,
                     const AgentSamples& samples, const std::vector<double>& q,
                     const TrainerConfig& cfg) {
  const int m_total = total_count(samples);
  if (m_total == 0) throw ContractViolation("update_critic: empty minibatch");
  FlatBatch batch = flatten(agents, samples, q);

  // Bootstrapped targets through each agent's target actor.
  std::vector<double> targets;
  targets.reserve(static_cast<std::size_t>(m_total));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (const auto& s : samples[i])
      targets.push_back(
          critic_target(s.transition.reward, s.transition.next_state, agents[i], nets, cfg.gamma));

  RMatrix q_out = forward(nets.critic, batch.inputs);  // 1 x M
  double loss = 0.0;
  RMatrix out_grads(1, m_total);
  for (int m = 0; m < m_total; ++m) {
    double err = q_out(0, m) - targets[static_cast<std::size_t>(m)];
    loss += batch.weights[static_cast<std::size_t>(m)] * err * err;
    out_grads(0, m) = 2.0 * batch.weights[static_cast<std::size_t>(m)] * err / m_total;
  }
  loss /= m_total;
  if (!std::isfinite(loss)) throw DivergenceError("update_critic: non-finite loss");

  GradientSet grads = backward(nets.critic, batch.inputs, out_grads);

  if (cfg.coupled_critic_gradient) {
    RMatrix sigma = forward(nets.predictive, batch.inputs);
    RMatrix pred_grads(1, m_total);
    for (int m = 0; m < m_total; ++m)
      pred_grads(0, m) = 2.0 * batch.weights[static_cast<std::size_t>(m)] *
                         (q_out(0, m) - sigma(0, m)) / m_total;
    grads.accumulate(backward(nets.critic, batch.inputs, pred_grads));
  }

  if (cfg.grad_clip > 0.0) clip_global_norm(grads, cfg.grad_clip);
  sgd_step(nets.critic, grads, cfg.effective_lr_critic());
  return loss;
}

double update_actor(Agent& agent, const CentralNets& nets,
                    const std::vector<SumTree::Sampled>& samples, double q_i,
                    const TrainerConfig& cfg) {
  const int m_i = static_cast<int>(samples.size());
  if (m_i == 0) throw ContractViolation("update_actor: empty minibatch");
  const Eigen::Index nd = agent.state.size();

  RMatrix states(nd, m_i);
  for (int m = 0; m < m_i; ++m) states.col(m) = samples[static_cast<std::size_t>(m)].transition.state;
  RMatrix actor_in = states / kPi;
  // The actor head is tanh, so its raw output is exactly the normalized
  // action the critic consumes; no pi factors enter the chain.
  RMatrix policy_out = forward(agent.actor, actor_in);

  RMatrix critic_in(2 * nd, m_i);
  critic_in.topRows(nd) = actor_in;
  critic_in.bottomRows(nd) = policy_out;
  RMatrix q_out = forward(nets.critic, critic_in);

  double objective = -(q_i / m_i) * q_out.sum();

  RMatrix dq(1, m_i);
  dq.setConstant(-(q_i / m_i));
  RMatrix critic_in_grads;
  backward(nets.critic, critic_in, dq, &critic_in_grads);  // critic frozen
  RMatrix d_policy = critic_in_grads.bottomRows(nd);

  GradientSet grads = backward(agent.actor, actor_in, d_policy);
  if (!grads.all_finite()) {
    std::cerr << "[hbf] warning: skipping actor update for agent " << agent.index
              << " (non-finite gradients)\n";
    return objective;
  }
  if (cfg.grad_clip > 0.0) clip_global_norm(grads, cfg.grad_clip);
  sgd_step(agent.actor, grads, cfg.effective_lr_actor());
  return objective;
}

double update_predictive(CentralNets& nets, const std::vector<Agent>& agents,
                         const AgentSamples& samples, const std::vector<double>& q,
                         const TrainerConfig& cfg) {
  const int m_total = total_count(samples);
  if (m_total == 0) throw ContractViolation("update_predictive: empty minibatch");
  FlatBatch batch = flatten(agents, samples, q);

  RMatrix q_out = forward(nets.critic, batch.inputs);  // detached target
  RMatrix sigma = forward(nets.predictive, batch.inputs);
  double loss = 0.0;
  RMatrix out_grads(1, m_total);
  for (int m = 0; m < m_total; ++m) {
    double err = q_out(0, m) - sigma(0, m);
    loss += batch.weights[static_cast<std::size_t>(m)] * err * err;
    out_grads(0, m) = -2.0 * batch.weights[static_cast<std::size_t>(m)] * err / m_total;
  }
  loss /= m_total;
  if (!std::isfinite(loss)) throw DivergenceError("update_predictive: non-finite loss");

  GradientSet grads = backward(nets.predictive, batch.inputs, out_grads);
  if (cfg.grad_clip > 0.0) clip_global_norm(grads, cfg.grad_clip);
  sgd_step(nets.predictive, grads, cfg.effective_lr_predictive());
  return loss;
}

int select_best(const std::vector<Agent>& agents, const CentralNets& nets) {
  if (agents.empty()) throw ContractViolation("select_best: no agents");
  int best = 0;
  double best_q = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Agent& a = agents[i];
    if (a.last_action.size() == 0)
      throw ContractViolation("select_best: agent has not acted yet");
    double qv = forward(nets.critic, critic_input(a.last_state, a.last_action))(0);
    if (qv > best_q) {
      best_q = qv;
      best = static_cast<int>(i);
    }
  }
  return best;
}

double EpisodeResult::iteration1_best_rate() const {
  if (trace.empty()) return 0.0;
  const auto& r = trace.front().raw_rewards;
  return *std::max_element(r.begin(), r.end());
}

double EpisodeResult::final_best_rate() const { return best ? best->sum_rate : 0.0; }

EpisodeResult train_episode(const ChannelMatrix& h, const TrainerConfig& cfg, Rng& rng) {
  cfg.validate();
  if (h.n_tx() != cfg.n_tx) throw ContractViolation("train_episode: channel antenna mismatch");
  if (h.n_users() > cfg.n_rf) throw ContractViolation("train_episode: more users than RF chains");

  const auto episode_start = Clock::now();
  CentralNets nets = make_central_nets(cfg, rng);
  std::vector<Agent> agents = init_agents(cfg, rng);
  const int y = cfg.n_agents;

  EpisodeResult res;
  std::vector<CMatrix> prev_f;
  prev_f.reserve(static_cast<std::size_t>(y));
  for (const auto& a : agents) prev_f.push_back(a.analog.matrix());

  double noise_std = cfg.noise_std;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    auto phase_start = Clock::now();
    std::vector<RVector> actions(static_cast<std::size_t>(y));
    for (int i = 0; i < y; ++i) actions[static_cast<std::size_t>(i)] = act(agents[static_cast<std::size_t>(i)], noise_std, rng);
    res.timings.act_ms += ms_since(phase_start);

    phase_start = Clock::now();
    std::vector<EnvStep> steps;
    steps.reserve(static_cast<std::size_t>(y));
    for (int i = 0; i < y; ++i) steps.push_back(env_step(h, actions[static_cast<std::size_t>(i)], cfg));
    res.timings.env_ms += ms_since(phase_start);

    phase_start = Clock::now();
    IterationTrace row;
    row.iter = t;
    for (int i = 0; i < y; ++i) {
      Agent& ag = agents[static_cast<std::size_t>(i)];
      const RVector& a = actions[static_cast<std::size_t>(i)];
      RVector x = critic_input(ag.state, a);
      double q_val = forward(nets.critic, x)(0);
      double sigma = cfg.predictive_reward ? forward(nets.predictive, x)(0) : 0.0;
      double raw = steps[static_cast<std::size_t>(i)].raw_reward;
      double shaped = cfg.predictive_reward ? shape_reward(raw, sigma, cfg.eta) : raw;

      double priority = cfg.prioritized_replay
                            ? compute_priority(q_val, shaped, 0.0,
                                               cfg.frequency_term ? ag.buffer.total_access() : 0.0,
                                               cfg.delta)
                            : 1.0;
      Transition tr;
      tr.state = ag.state;
      tr.action = a;
      tr.reward = shaped;
      tr.next_state = a;  // the next state is this iteration's phases
      tr.priority = priority;
      tr.access_count = 0.0;
      tr.born_iter = t;
      ag.buffer.push(std::move(tr));

      ag.last_state = ag.state;
      ag.last_action = a;
      ag.last_solution = steps[static_cast<std::size_t>(i)].solution;
      ag.last_q = q_val;
      row.raw_rewards.push_back(raw);
      row.shaped_rewards.push_back(shaped);
      row.q_values.push_back(q_val);
    }

    std::vector<double> q_weights;
    if (cfg.prioritized_replay) {
      std::vector<double> roots;
      roots.reserve(static_cast<std::size_t>(y));
      for (const auto& ag : agents) {
        double r = ag.buffer.root();
        if (cfg.normalize_root_by_occupancy && ag.buffer.size() > 0) r /= ag.buffer.size();
        roots.push_back(r);
      }
      q_weights = agent_priorities(roots);
    } else {
      q_weights.assign(static_cast<std::size_t>(y), 1.0 / y);
    }

    std::vector<int> occupancy;
    occupancy.reserve(static_cast<std::size_t>(y));
    for (const auto& ag : agents) occupancy.push_back(ag.buffer.size());
    std::vector<int> counts = allocate_minibatch(q_weights, cfg.minibatch, occupancy);

    AgentSamples samples(static_cast<std::size_t>(y));
    for (int i = 0; i < y; ++i)
      samples[static_cast<std::size_t>(i)] =
          agents[static_cast<std::size_t>(i)].buffer.sample(counts[static_cast<std::size_t>(i)], rng);

    try {
      update_critic(nets, agents, samples, q_weights, cfg);
      if (cfg.predictive_reward) update_predictive(nets, agents, samples, q_weights, cfg);
      for (int i = 0; i < y; ++i)
        if (!samples[static_cast<std::size_t>(i)].empty())
          update_actor(agents[static_cast<std::size_t>(i)], nets, samples[static_cast<std::size_t>(i)],
                       q_weights[static_cast<std::size_t>(i)], cfg);
    } catch (const DivergenceError& e) {
      std::cerr << "[hbf] episode diverged at iteration " << t << ": " << e.what() << '\n';
      res.diverged = true;
      res.iterations_run = t;
      res.timings.update_ms += ms_since(phase_start);
      break;
    }

    if (cfg.prioritized_replay) {
      for (int i = 0; i < y; ++i) {
        Agent& ag = agents[static_cast<std::size_t>(i)];
        std::set<int> leaves;
        for (const auto& s : samples[static_cast<std::size_t>(i)]) leaves.insert(s.leaf);
        for (int leaf : leaves) {
          const Transition& tr = ag.buffer.at(leaf);
          double q_new = forward(nets.critic, critic_input(tr.state, tr.action))(0);
          double phi = compute_priority(q_new, tr.reward, cfg.frequency_term ? tr.access_count : 0.0,
                                        cfg.frequency_term ? ag.buffer.total_access() : 1.0, cfg.delta);
          ag.buffer.update_priority(leaf, phi);
        }
      }
    }

    for (auto& ag : agents) soft_update(ag.target_actor, ag.actor, cfg.tau);
    soft_update(nets.target_critic, nets.critic, cfg.tau);
    soft_update(nets.target_predictive, nets.predictive, cfg.tau);
    res.timings.update_ms += ms_since(phase_start);

    bool all_converged = true;
    for (int i = 0; i < y; ++i) {
      Agent& ag = agents[static_cast<std::size_t>(i)];
      AnalogPrecoder f_new =
          AnalogPrecoder::from_phase_vector(actions[static_cast<std::size_t>(i)], cfg.n_tx, cfg.n_rf);
      double f_step = frob_norm_diff(f_new.matrix(), prev_f[static_cast<std::size_t>(i)]);
      prev_f[static_cast<std::size_t>(i)] = f_new.matrix();
      ag.analog = std::move(f_new);
      ag.state = actions[static_cast<std::size_t>(i)];
      row.f_steps.push_back(f_step);
      if (!(f_step < cfg.tau_thres)) all_converged = false;
    }
    row.best_q = *std::max_element(row.q_values.begin(), row.q_values.end());
    row.max_f_step = *std::max_element(row.f_steps.begin(), row.f_steps.end());
    res.trace.push_back(std::move(row));
    res.iterations_run = t;

    noise_std *= cfg.noise_decay;
    if (noise_std < cfg.noise_floor) noise_std = 0.0;

    if (all_converged) {
      res.converged = true;
      break;
    }
  }

  if (!res.diverged && !agents.empty() && agents.front().last_action.size() > 0) {
    res.best_agent = select_best(agents, nets);
    res.best = agents[static_cast<std::size_t>(res.best_agent)].last_solution;
  }
  res.timings.total_ms = ms_since(episode_start);
  return res;
}

nlohmann::json episode_to_json(const EpisodeResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& row : r.trace) {
    trace.push_back(nlohmann::json{{"iter", row.iter},
                                   {"raw_rewards", row.raw_rewards},
                                   {"shaped_rewards", row.shaped_rewards},
                                   {"q_values", row.q_values},
                                   {"f_steps", row.f_steps},
                                   {"best_q", row.best_q},
                                   {"max_f_step", row.max_f_step}});
  }
  nlohmann::json j{{"trace", std::move(trace)},
                   {"iterations_run", r.iterations_run},
                   {"converged", r.converged},
                   {"diverged", r.diverged},
                   {"best_agent", r.best_agent},
                   {"timings",
                    {{"act_ms", r.timings.act_ms},
                     {"env_ms", r.timings.env_ms},
                     {"update_ms", r.timings.update_ms},
                     {"total_ms", r.timings.total_ms}}}};
  if (r.best) j["best"] = solution_to_json(*r.best);
  return j;
}

}  // namespace hbf
