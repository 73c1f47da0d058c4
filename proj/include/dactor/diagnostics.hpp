#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

#include "dactor/agents.hpp"
#include "dactor/envs.hpp"
#include "dactor/replay.hpp"
#include "dactor/rng.hpp"

namespace dactor {

/// The requested analysis does not apply to this agent or environment.
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BiasReport {
  double mean_estimate = 0.0;
  double mean_true_value = 0.0;
  double bias = 0.0;  // mean_estimate - mean_true_value
  std::size_t n_states = 0;
  std::size_t rollout_horizon = 0;
};

/// Discounted return of the zero-noise policy from `start`, for at most `horizon` steps or
/// until the environment signals done. `env` is copied, never mutated.
double monte_carlo_return(const AgentState& agent, const Environment& env,
                          std::span<const double> start, std::size_t horizon, double gamma);

/// Mean of the agent's estimator over the batch states.
double mean_estimate(const AgentState& agent, const Batch& states);

/// Samples n_states stored states and compares the agent's estimator with truncated
/// Monte-Carlo returns of its deterministic policy started from those states.
BiasReport estimate_bias(const AgentState& agent, const ReplayBuffer& buffer,
                         const Environment& env, std::size_t n_states, std::size_t horizon,
                         Rng& rng);

/// Same measurement on caller-provided states.
BiasReport estimate_bias_on(const AgentState& agent, const Batch& states, const Environment& env,
                            std::size_t horizon);

struct DevianceReport {
  double signed_mean = 0.0;    // mean Q1(s,a) - Q2(s,a)
  double absolute_mean = 0.0;  // mean |Q1(s,a) - Q2(s,a)|
};

/// Online critics evaluated at the stored (s, a) pairs. Throws Unsupported for one critic.
DevianceReport critic_deviance(const AgentState& agent, const Batch& batch);

/// (baseline - regularized) / baseline. Throws std::domain_error for a zero baseline.
double deviance_reduction(double e_baseline, double e_regularized);

struct ErrorTriple {
  double value_error = 0.0;
  double policy_execution_error = 0.0;
  double critic_deviance_error = 0.0;
};

/// Sup-norm error measurements over the batch using the online networks.
///
/// value_error: max_s (max_a Qmin(s, a) - V(s; nu = 0)) where Qmin is the smaller of the two
/// critics and the inner max runs over a uniform grid of `grid_resolution` points per action
/// dimension together with both actors' actions, so it never falls below V(s; 0).
/// policy_execution_error: max over s and critics i of |Q_i(s, pi1(s)) - Q_i(s, pi2(s))|.
/// critic_deviance_error: max_s |Q1(s, a) - Q2(s, a)| at the stored actions.
///
/// Throws Unsupported without two actors and two critics, or for action_dim > 2.
ErrorTriple error_triple(const AgentState& agent, const Batch& batch,
                         std::size_t grid_resolution = 201);

/// nu (2 eps_d + eps_pi) / (1 - gamma): the double-actor term of the value-iteration bound.
double double_actor_bound_term(double nu, double gamma, const ErrorTriple& errors);

struct Improvement {
  double relative = 0.0;  // mean_i (a_i - d_i) / d_i
  double percent = 0.0;   // 100 * (1 + relative): the baseline itself reports 100%
};

/// Throws std::invalid_argument on length mismatch or empty input, std::domain_error on a
/// zero baseline entry.
Improvement improvement_metric(std::span<const double> baseline_scores,
                               std::span<const double> method_scores);

}  // namespace dactor
