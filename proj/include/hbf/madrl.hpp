#ifndef HBF_MADRL_HPP
#define HBF_MADRL_HPP

#include <optional>
#include <vector>

#include "hbf/channel.hpp"
#include "hbf/neural.hpp"
#include "hbf/precoding.hpp"
#include "hbf/replay.hpp"

#include <json.hpp>

namespace hbf {

struct TrainerConfig {
  int n_agents = 2;                 // Y
  int n_tx = 64;
  int n_rf = 8;
  int max_iters = 300;              // T
  double gamma = 0.95;
  double tau = 1e-3;
  double tau_thres = 1e-4;          // Frobenius step below this counts as converged
  double eta = 0.1;                 // reward shaping weight
  double delta = 1e-3;              // priority floor
  int minibatch = 32;               // M
  int buffer_capacity = 500;
  double lr = 1e-3;                 // shared learning rate
  double lr_actor = 0.0;            // per-network overrides; 0 means use lr
  double lr_critic = 0.0;
  double lr_predictive = 0.0;
  double noise_std = 0.3;           // exploration noise on action phases, radians
  double noise_decay = 0.995;       // multiplicative per iteration
  double noise_floor = 0.0;         // stddev snaps to zero once below this
  double grad_clip = 1.0;           // global-norm clip; 0 disables
  double snr_db = 5.0;              // P_t = 10^(snr_db/10), unit noise power
  int hidden1 = 300;
  int hidden2 = 200;
  bool reward_p_squared = false;    // log2(1 + p^2/sigma^2) reward variant
  bool prioritized_replay = true;   // off: uniform priorities and uniform agent weights
  bool frequency_term = true;       // access-frequency term inside the priority
  bool predictive_reward = true;    // off: raw reward stored, predictive net untouched
  bool coupled_critic_gradient = false;  // predictive loss also backpropagates into the critic
  bool normalize_root_by_occupancy = false;
  int init_retries = 10;

  void validate() const;
  double p_total() const;
  int action_dim() const { return n_tx * n_rf; }
  double effective_lr_actor() const { return lr_actor > 0.0 ? lr_actor : lr; }
  double effective_lr_critic() const { return lr_critic > 0.0 ? lr_critic : lr; }
  double effective_lr_predictive() const { return lr_predictive > 0.0 ? lr_predictive : lr; }
};

nlohmann::json trainer_config_to_json(const TrainerConfig& cfg);
TrainerConfig trainer_config_from_json(const nlohmann::json& j);

/// One learner: its actor pair, replay buffer, and rolling (s, a) bookkeeping.
/// state holds the phases of the precoder from the previous iteration.
struct Agent {
  int index;
  MlpParams actor;
  MlpParams target_actor;
  SumTree buffer;
  RVector state;
  AnalogPrecoder analog;
  RVector last_state;
  RVector last_action;
  std::optional<HybridSolution> last_solution;
  double last_q = 0.0;
};

/// Centralized critic and predictive networks shared by every agent, each
/// with its Polyak-averaged target copy. The target predictive network is
/// maintained alongside the others but nothing reads it.
struct CentralNets {
  MlpParams critic;
  MlpParams target_critic;
  MlpParams predictive;
  MlpParams target_predictive;
};

CentralNets make_central_nets(const TrainerConfig& cfg, Rng& rng);

/// Y agents whose initial precoders are drawn with random unit-modulus
/// entries, Gram-Schmidt orthogonalized as vectors, then projected back to
/// unit modulus by keeping entrywise phases. Rank-deficient draws are
/// retried up to cfg.init_retries times.
std::vector<Agent> init_agents(const TrainerConfig& cfg, Rng& rng);

/// Networks consume phases divided by pi; states and actions stay in
/// (-pi, pi].
RVector critic_input(const RVector& state, const RVector& action);

/// pi * actor(state/pi) plus Gaussian exploration noise, wrapped to
/// (-pi, pi]. Consumes no randomness when noise_std is zero.
RVector act(const Agent& agent, double noise_std, Rng& rng);

struct EnvStep {
  double raw_reward = 0.0;
  HybridSolution solution;
};

/// Reshapes the action into the analog precoder and runs the ZF +
/// water-filling chain. A degenerate effective channel yields reward zero
/// and a flagged all-zero digital solution instead of an error.
EnvStep env_step(const ChannelMatrix& h, const RVector& action, const TrainerConfig& cfg);

/// r_bar = raw + eta * sigma_pred.
double shape_reward(double raw, double sigma_pred, double eta);

/// y = r + gamma * Q'(s', A'(s')) through the target actor and target critic.
double critic_target(double reward, const RVector& next_state, const Agent& agent,
                     const CentralNets& nets, double gamma);

using AgentSamples = std::vector<std::vector<SumTree::Sampled>>;

/// One SGD step on the weighted TD loss
///   L = (1/M) sum_i sum_m q_i (Q(s,a) - y)^2.
/// Returns the pre-step loss. Throws DivergenceError on a non-finite loss.
/// In coupled mode the predictive loss gradient also flows into the critic.
double update_critic(CentralNets& nets, const std::vector<Agent>& agents,
                     const AgentSamples& samples, const std::vector<double>& q,
                     const TrainerConfig& cfg);

/// One SGD step minimizing (q_i/M_i) sum_m -Q(s, A_i(s)) with the critic
/// frozen. Returns the pre-step objective. Non-finite gradients skip the
/// update with a warning on stderr.
double update_actor(Agent& agent, const CentralNets& nets,
                    const std::vector<SumTree::Sampled>& samples, double q_i,
                    const TrainerConfig& cfg);

/// One SGD step on (1/M) sum q_i (Q(s,a) - sigma(s,a))^2 with Q detached.
/// Returns the pre-step loss.
double update_predictive(CentralNets& nets, const std::vector<Agent>& agents,
                         const AgentSamples& samples, const std::vector<double>& q,
                         const TrainerConfig& cfg);

/// Agent whose final (s, a) the critic scores highest; ties break toward the
/// lowest index.
int select_best(const std::vector<Agent>& agents, const CentralNets& nets);

struct IterationTrace {
  int iter = 0;
  std::vector<double> raw_rewards;
  std::vector<double> shaped_rewards;
  std::vector<double> q_values;
  std::vector<double> f_steps;
  double best_q = 0.0;
  double max_f_step = 0.0;
};

struct PhaseTimings {
  double act_ms = 0.0;
  double env_ms = 0.0;
  double update_ms = 0.0;
  double total_ms = 0.0;
};

struct EpisodeResult {
  std::vector<IterationTrace> trace;
  int best_agent = -1;
  std::optional<HybridSolution> best;
  int iterations_run = 0;
  bool converged = false;
  bool diverged = false;
  PhaseTimings timings;

  double iteration1_best_rate() const;
  double final_best_rate() const;
};

/// Runs the full learning loop on one fixed channel realization: act,
/// environment reward, predictive shaping, prioritized store, cross-agent
/// minibatch allocation, critic/predictive/actor updates, target soft
/// updates, early stop once every agent's precoder step drops below
/// tau_thres. Divergence returns the partial trace with diverged set.
EpisodeResult train_episode(const ChannelMatrix& h, const TrainerConfig& cfg, Rng& rng);

nlohmann::json episode_to_json(const EpisodeResult& result);

}  // namespace hbf

#endif
