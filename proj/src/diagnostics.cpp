#include "dactor/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace dactor {

double monte_carlo_return(const AgentState& agent, const Environment& env,
                          std::span<const double> start, std::size_t horizon, double gamma) {
  std::unique_ptr<Environment> sim = env.clone();
  sim->set_state(start);
  std::vector<double> state(start.begin(), start.end());
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t h = 0; h < horizon; ++h) {
    const std::vector<double> a = greedy_action(agent, state);
    StepResult r = sim->step(a);
    total += discount * r.reward;
    discount *= gamma;
    state = std::move(r.next_state);
    if (r.done) break;
  }
  return total;
}

double mean_estimate(const AgentState& agent, const Batch& states) {
  double sum = 0.0;
  for (std::size_t i = 0; i < states.size; ++i) sum += estimator_value(agent, states.state(i));
  return states.size > 0 ? sum / static_cast<double>(states.size) : 0.0;
}

BiasReport estimate_bias_on(const AgentState& agent, const Batch& states, const Environment& env,
                            std::size_t horizon) {
  if (states.size == 0) throw std::invalid_argument("estimate_bias: no states");
  if (!env.supports_set_state()) {
    throw Unsupported("estimate_bias: " + env.name() + " cannot start from arbitrary states");
  }
  double est = 0.0;
  double truth = 0.0;
  for (std::size_t i = 0; i < states.size; ++i) {
    est += estimator_value(agent, states.state(i));
    truth += monte_carlo_return(agent, env, states.state(i), horizon, agent.config.target.gamma);
  }
  BiasReport r;
  r.n_states = states.size;
  r.rollout_horizon = horizon;
  r.mean_estimate = est / static_cast<double>(states.size);
  r.mean_true_value = truth / static_cast<double>(states.size);
  r.bias = r.mean_estimate - r.mean_true_value;
  return r;
}

BiasReport estimate_bias(const AgentState& agent, const ReplayBuffer& buffer,
                         const Environment& env, std::size_t n_states, std::size_t horizon,
                         Rng& rng) {
  if (n_states == 0) throw std::invalid_argument("estimate_bias: n_states must be positive");
  if (buffer.size() < n_states) {
    throw NotReady("estimate_bias: buffer holds fewer than n_states transitions");
  }
  return estimate_bias_on(agent, buffer.sample(n_states, rng), env, horizon);
}

DevianceReport critic_deviance(const AgentState& agent, const Batch& batch) {
  if (agent.critics.size() != 2) throw Unsupported("critic deviance needs two critics");
  if (batch.size == 0) throw std::invalid_argument("critic deviance: empty batch");
  double signed_sum = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < batch.size; ++i) {
    const double d = critic_value(agent.critics[0], batch.state(i), batch.action(i)) -
                     critic_value(agent.critics[1], batch.state(i), batch.action(i));
    signed_sum += d;
    abs_sum += std::abs(d);
  }
  const auto n = static_cast<double>(batch.size);
  return {signed_sum / n, abs_sum / n};
}

double deviance_reduction(double e_baseline, double e_regularized) {
  if (e_baseline == 0.0) throw std::domain_error("deviance reduction: zero baseline");
  return (e_baseline - e_regularized) / e_baseline;
}

namespace {

double min_critic(const AgentState& agent, std::span<const double> s, std::span<const double> a) {
  return std::min(critic_value(agent.critics[0], s, a), critic_value(agent.critics[1], s, a));
}

}  // namespace

ErrorTriple error_triple(const AgentState& agent, const Batch& batch,
                         std::size_t grid_resolution) {
  if (agent.critics.size() != 2 || agent.actors.size() != 2) {
    throw Unsupported("error triple needs two actors and two critics");
  }
  const std::size_t ad = agent.config.env.action_dim;
  if (ad > 2) throw Unsupported("action grid is limited to two dimensions");
  if (grid_resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
  const double bound = agent.config.env.action_bound;

  std::vector<double> ticks(grid_resolution);
  for (std::size_t k = 0; k < grid_resolution; ++k) {
    ticks[k] = -bound + 2.0 * bound * static_cast<double>(k) /
                            static_cast<double>(grid_resolution - 1);
  }
  std::size_t points = grid_resolution;
  if (ad == 2) points *= grid_resolution;

  ErrorTriple e;
  std::vector<double> a(ad);
  for (std::size_t i = 0; i < batch.size; ++i) {
    const auto s = batch.state(i);
    const std::vector<double> a1 = agent.actors[0].forward(s);
    const std::vector<double> a2 = agent.actors[1].forward(s);
    const double v_hat = std::max(min_critic(agent, s, a1), min_critic(agent, s, a2));
    double best = v_hat;
    for (std::size_t p = 0; p < points; ++p) {
      a[0] = ticks[p % grid_resolution];
      if (ad == 2) a[1] = ticks[p / grid_resolution];
      best = std::max(best, min_critic(agent, s, a));
    }
    e.value_error = std::max(e.value_error, best - v_hat);

    for (const Mlp& critic : agent.critics) {
      e.policy_execution_error = std::max(
          e.policy_execution_error, std::abs(critic_value(critic, s, a1) - critic_value(critic, s, a2)));
    }
    e.critic_deviance_error =
        std::max(e.critic_deviance_error,
                 std::abs(critic_value(agent.critics[0], s, batch.action(i)) -
                          critic_value(agent.critics[1], s, batch.action(i))));
  }
  return e;
}

double double_actor_bound_term(double nu, double gamma, const ErrorTriple& errors) {
  return nu * (2.0 * errors.critic_deviance_error + errors.policy_execution_error) / (1.0 - gamma);
}

Improvement improvement_metric(std::span<const double> baseline_scores,
                               std::span<const double> method_scores) {
  if (baseline_scores.empty() || baseline_scores.size() != method_scores.size()) {
    throw std::invalid_argument("improvement: score lists must be non-empty and equally long");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < baseline_scores.size(); ++i) {
    if (baseline_scores[i] == 0.0) throw std::domain_error("improvement: zero baseline score");
    sum += (method_scores[i] - baseline_scores[i]) / baseline_scores[i];
  }
  Improvement out;
  out.relative = sum / static_cast<double>(baseline_scores.size());
  out.percent = 100.0 * (1.0 + out.relative);
  return out;
}

}  // namespace dactor
