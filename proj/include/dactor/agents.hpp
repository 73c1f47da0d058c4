#pragma once

// Double-actor deterministic policy-gradient family: DDPG, TD3, DADDPG, DATD3, CTD3, DARC.
//
// Conventions shared by every algorithm here:
//  * Noise magnitudes (exploration sigma, target sigma, target clip) are fractions of
//    the environment's action bound.
//  * The step index t is the number of train_step calls made before the current one
//    (0-based). Parity-driven schedules use t % 2: pair 1 (index 0) on even t.
//  * Pair i means (actor i, critic i); critic i drives actor i's policy gradient.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dactor/envs.hpp"
#include "dactor/neural.hpp"
#include "dactor/replay.hpp"
#include "dactor/rng.hpp"

namespace dactor {

enum class Algorithm : std::uint8_t { DDPG, TD3, DADDPG, DATD3, CTD3, DARC };
enum class UpdateScheme : std::uint8_t { Cross, Both };
enum class ExplorationMode : std::uint8_t { MaxQ, FirstActor };

std::string_view to_string(Algorithm a);
std::string_view to_string(UpdateScheme s);
std::string_view to_string(ExplorationMode m);
Algorithm parse_algorithm(std::string_view name);  // case-insensitive
UpdateScheme parse_update_scheme(std::string_view name);
ExplorationMode parse_exploration_mode(std::string_view name);
std::vector<std::string> algorithm_names();

std::size_t actor_count(Algorithm a);
std::size_t critic_count(Algorithm a);

struct TargetConfig {
  double nu = 0.25;          // soft-target weight on the min branch, in [0, 1)
  double lambda = 0.005;     // critic-deviance penalty
  double target_noise = 0.2;
  double noise_clip = 0.5;
  double gamma = 0.99;
  double tau = 0.005;

  void validate() const;  // throws std::invalid_argument
};

struct ExplorationConfig {
  double action_noise = 0.1;
  ExplorationMode mode = ExplorationMode::MaxQ;

  void validate() const;
};

struct AgentConfig {
  Algorithm algorithm = Algorithm::DARC;
  EnvSpec env;
  std::vector<std::size_t> actor_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{64, 64};
  double learning_rate = 1e-3;
  std::size_t batch_size = 100;
  TargetConfig target;
  ExplorationConfig exploration;
  UpdateScheme update_scheme = UpdateScheme::Cross;
  // Off: double-actor algorithms bootstrap from actor 1 only and keep actor 2 for exploration.
  bool value_correction = true;
  std::size_t policy_delay = 2;  // TD3 actor/target update interval

  void validate() const;
};

/// Scratch buffers reused across calls; not part of the agent's logical state.
struct Workspace {
  ForwardTrace actor_trace;
  ForwardTrace critic_trace;
  ForwardTrace aux_trace;
  std::vector<double> critic_input;
  Batch batch;

  BatchTrace actor_rows;
  BatchTrace critic_rows;
  BatchTrace aux_rows;
  std::vector<double> critic_inputs;
  std::vector<double> upstream;
  std::vector<double> input_grads;
};

/// Writes rows of (state, action) into `out` as the critics' input matrix.
void stack_critic_inputs(std::vector<double>& out, std::span<const double> states,
                         std::span<const double> actions, std::size_t rows,
                         std::size_t state_dim, std::size_t action_dim);

/// Online and target networks plus optimizer state for one algorithm instance.
struct AgentState {
  AgentConfig config;
  std::vector<Mlp> actors;
  std::vector<Mlp> critics;
  std::vector<Mlp> target_actors;
  std::vector<Mlp> target_critics;
  std::vector<AdamState> actor_optimizers;
  std::vector<AdamState> critic_optimizers;
  std::uint64_t step_counter = 0;
  mutable Workspace scratch;

  /// Random initialization (actors, then critics, in index order); targets copy online nets.
  AgentState(AgentConfig cfg, Rng& init_rng);
};

// ---------------------------------------------------------------------------
// Target-value estimators. Critics take the concatenation (state, action).

double critic_value(const Mlp& critic, std::span<const double> state,
                    std::span<const double> action);

/// clamp(action + clip(noise, -clip, clip), -bound, bound) componentwise; noise is absolute.
std::vector<double> smooth_action(std::span<const double> action, std::span<const double> noise,
                                  double noise_clip, double action_bound);

/// pi'(s') plus Gaussian N(0, target_noise * bound) clipped to noise_clip * bound, then clamped.
std::vector<double> smoothed_target_action(const Mlp& actor_target,
                                           std::span<const double> next_state,
                                           const TargetConfig& cfg, double action_bound, Rng& rng);

double target_ddpg(const Mlp& critic_target, const Mlp& actor_target,
                   std::span<const double> next_state);
double target_td3(std::span<const Mlp> critic_targets, const Mlp& actor_target,
                  std::span<const double> next_state);
double target_daddpg(const Mlp& critic_target, std::span<const Mlp> actor_targets,
                     std::span<const double> next_state);

/// Per-actor clipped values: Q1 = min_j Q'_j(s', a1), Q2 = min_j Q'_j(s', a2).
struct ClippedPair {
  double first;
  double second;
};
ClippedPair clipped_values(std::span<const Mlp> critic_targets, std::span<const double> next_state,
                           std::span<const double> action1, std::span<const double> action2);

double target_datd3(std::span<const Mlp> critic_targets, std::span<const double> next_state,
                    std::span<const double> action1, std::span<const double> action2);

/// nu * min(Q1, Q2) + (1 - nu) * max(Q1, Q2), evaluated as max - nu * (max - min) so that
/// nu = 0 returns max exactly and the result is monotone in nu under rounding. Throws std::invalid_argument unless 0 <= nu < 1.
double soft_target(std::span<const Mlp> critic_targets, std::span<const double> next_state,
                   std::span<const double> action1, std::span<const double> action2, double nu);
double soft_combine(double q1, double q2, double nu);

// ---------------------------------------------------------------------------
// Losses and updates.

struct CriticLoss {
  double loss = 0.0;       // td + lambda * deviance
  double td_loss = 0.0;    // mean (Q_i - y)^2
  double deviance = 0.0;   // mean (Q_i - Q_other)^2, 0 without another critic
  GradientSet grads;
};

/// Mean over the batch of (Q_i(s,a) - y)^2 + lambda (Q_i(s,a) - Q_other(s,a))^2. The other
/// critic is held constant; gradients belong to `critic` only. Throws NumericalError on
/// a non-finite target.
CriticLoss critic_loss(const Mlp& critic, const Batch& batch, std::span<const double> targets,
                       const Mlp* other_critic, double lambda, Workspace* scratch = nullptr);

struct ActorGradient {
  double objective = 0.0;  // mean_batch Q(s, pi(s))
  GradientSet grads;       // gradient of -objective w.r.t. actor parameters
};

ActorGradient actor_gradient(const Mlp& actor, const Mlp& critic, const Batch& batch,
                             Workspace* scratch = nullptr);

/// One Adam step ascending mean_batch Q(s, pi(s)). Returns the objective before the step.
double actor_update(Mlp& actor, AdamState& optimizer, const Mlp& critic, const Batch& batch,
                    double learning_rate, Workspace* scratch = nullptr);

// ---------------------------------------------------------------------------
// Acting.

/// Index of the actor the agent would execute in `state` (before noise).
std::size_t choose_actor(const AgentState& agent, std::span<const double> state,
                         ExplorationMode mode);

std::vector<double> select_action(const AgentState& agent, std::span<const double> state,
                                  const ExplorationConfig& expl, Rng& rng);

/// Zero-noise MaxQ action used for evaluation and Monte-Carlo rollouts.
std::vector<double> greedy_action(const AgentState& agent, std::span<const double> state);

/// The agent's own estimator at state s, from target networks with unsmoothed actions.
double estimator_value(const AgentState& agent, std::span<const double> state);

// ---------------------------------------------------------------------------
// Training.

struct TrainingRngs {
  Rng& sampling;
  Rng& target_noise;
};

struct StepMetrics {
  std::uint64_t step_index = 0;
  std::vector<std::size_t> updated_critics;
  std::vector<std::size_t> updated_actors;
  double critic_loss = 0.0;     // mean over critic updates in this step
  double td_loss = 0.0;
  double deviance = 0.0;
  double estimate_mean = 0.0;   // mean V-hat(s') over all target computations
  double actor_objective = 0.0; // mean over actor updates (0 if none)
  std::vector<std::vector<double>> targets;  // y vector of each target computation, in order
};

/// One gradient step of the configured algorithm. Requires a non-empty buffer.
StepMetrics train_step(AgentState& agent, const ReplayBuffer& buffer, TrainingRngs rngs);

}  // namespace dactor
