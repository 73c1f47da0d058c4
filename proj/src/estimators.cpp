#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dactor/agents.hpp"

namespace dactor {

namespace {

void fill_critic_input(std::vector<double>& buf, std::span<const double> state,
                       std::span<const double> action) {
  buf.resize(state.size() + action.size());
  std::copy(state.begin(), state.end(), buf.begin());
  std::copy(action.begin(), action.end(), buf.begin() + static_cast<std::ptrdiff_t>(state.size()));
}

void require_pair(std::span<const Mlp> nets, const char* what) {
  if (nets.size() != 2) throw std::invalid_argument(std::string(what) + ": expected two networks");
}

}  // namespace

double critic_value(const Mlp& critic, std::span<const double> state,
                    std::span<const double> action) {
  std::vector<double> input;
  fill_critic_input(input, state, action);
  ForwardTrace trace;
  return critic.forward_scalar(input, trace);
}

std::vector<double> smooth_action(std::span<const double> action, std::span<const double> noise,
                                  double noise_clip, double action_bound) {
  if (noise.size() != action.size()) throw std::invalid_argument("noise/action length mismatch");
  std::vector<double> out(action.size());
  for (std::size_t i = 0; i < action.size(); ++i) {
    out[i] = std::clamp(action[i] + std::clamp(noise[i], -noise_clip, noise_clip), -action_bound,
                        action_bound);
  }
  return out;
}

std::vector<double> smoothed_target_action(const Mlp& actor_target,
                                           std::span<const double> next_state,
                                           const TargetConfig& cfg, double action_bound, Rng& rng) {
  std::vector<double> a = actor_target.forward(next_state);
  std::vector<double> noise(a.size(), 0.0);
  if (cfg.target_noise > 0.0) {
    for (double& n : noise) n = rng.normal(0.0, cfg.target_noise * action_bound);
  }
  return smooth_action(a, noise, cfg.noise_clip * action_bound, action_bound);
}

double target_ddpg(const Mlp& critic_target, const Mlp& actor_target,
                   std::span<const double> next_state) {
  return critic_value(critic_target, next_state, actor_target.forward(next_state));
}

double target_td3(std::span<const Mlp> critic_targets, const Mlp& actor_target,
                  std::span<const double> next_state) {
  require_pair(critic_targets, "target_td3");
  const std::vector<double> a = actor_target.forward(next_state);
  return std::min(critic_value(critic_targets[0], next_state, a),
                  critic_value(critic_targets[1], next_state, a));
}

double target_daddpg(const Mlp& critic_target, std::span<const Mlp> actor_targets,
                     std::span<const double> next_state) {
  require_pair(actor_targets, "target_daddpg");
  return std::min(critic_value(critic_target, next_state, actor_targets[0].forward(next_state)),
                  critic_value(critic_target, next_state, actor_targets[1].forward(next_state)));
}

ClippedPair clipped_values(std::span<const Mlp> critic_targets, std::span<const double> next_state,
                           std::span<const double> action1, std::span<const double> action2) {
  require_pair(critic_targets, "clipped_values");
  return {std::min(critic_value(critic_targets[0], next_state, action1),
                   critic_value(critic_targets[1], next_state, action1)),
          std::min(critic_value(critic_targets[0], next_state, action2),
                   critic_value(critic_targets[1], next_state, action2))};
}

double target_datd3(std::span<const Mlp> critic_targets, std::span<const double> next_state,
                    std::span<const double> action1, std::span<const double> action2) {
  const ClippedPair q = clipped_values(critic_targets, next_state, action1, action2);
  return std::max(q.first, q.second);
}

double soft_combine(double q1, double q2, double nu) {
  if (!(nu >= 0.0 && nu < 1.0)) throw std::invalid_argument("nu must lie in [0, 1)");
  const double hi = std::max(q1, q2);
  return hi - nu * (hi - std::min(q1, q2));
}

double soft_target(std::span<const Mlp> critic_targets, std::span<const double> next_state,
                   std::span<const double> action1, std::span<const double> action2, double nu) {
  if (!(nu >= 0.0 && nu < 1.0)) throw std::invalid_argument("nu must lie in [0, 1)");
  const ClippedPair q = clipped_values(critic_targets, next_state, action1, action2);
  return soft_combine(q.first, q.second, nu);
}

// ---------------------------------------------------------------------------

void stack_critic_inputs(std::vector<double>& out, std::span<const double> states,
                         std::span<const double> actions, std::size_t rows,
                         std::size_t state_dim, std::size_t action_dim) {
  const std::size_t width = state_dim + action_dim;
  out.resize(rows * width);
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = out.data() + i * width;
    std::copy_n(states.data() + i * state_dim, state_dim, row);
    std::copy_n(actions.data() + i * action_dim, action_dim, row + state_dim);
  }
}

CriticLoss critic_loss(const Mlp& critic, const Batch& batch, std::span<const double> targets,
                       const Mlp* other_critic, double lambda, Workspace* scratch) {
  if (batch.size == 0) throw std::invalid_argument("critic_loss: empty batch");
  if (targets.size() != batch.size) throw std::invalid_argument("critic_loss: one target per row");
  for (double y : targets) {
    if (!std::isfinite(y)) throw NumericalError("critic_loss: non-finite target");
  }
  Workspace local;
  Workspace& ws = scratch != nullptr ? *scratch : local;

  CriticLoss out{0.0, 0.0, 0.0, GradientSet(critic)};
  const std::size_t rows = batch.size;
  const double n = static_cast<double>(rows);
  const bool penalized = other_critic != nullptr && lambda != 0.0;
  stack_critic_inputs(ws.critic_inputs, batch.states, batch.actions, rows, batch.state_dim,
                      batch.action_dim);
  critic.forward_batch(ws.critic_inputs, rows, ws.critic_rows);
  if (other_critic != nullptr) other_critic->forward_batch(ws.critic_inputs, rows, ws.aux_rows);
  const auto q = ws.critic_rows.output();

  double td_sum = 0.0;
  double dev_sum = 0.0;
  ws.upstream.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double td = q[i] - targets[i];
    double dq = td;
    td_sum += td * td;
    if (other_critic != nullptr) {
      const double dev = q[i] - ws.aux_rows.output()[i];
      dev_sum += dev * dev;
      if (penalized) dq += lambda * dev;
    }
    ws.upstream[i] = 2.0 * dq / n;
  }
  critic.backward_batch(ws.critic_rows, ws.upstream, &out.grads, {});
  out.td_loss = td_sum / n;
  out.deviance = dev_sum / n;
  out.loss = out.td_loss + lambda * out.deviance;
  return out;
}

ActorGradient actor_gradient(const Mlp& actor, const Mlp& critic, const Batch& batch,
                             Workspace* scratch) {
  if (batch.size == 0) throw std::invalid_argument("actor_gradient: empty batch");
  Workspace local;
  Workspace& ws = scratch != nullptr ? *scratch : local;

  ActorGradient out{0.0, GradientSet(actor)};
  const std::size_t rows = batch.size;
  const std::size_t sd = batch.state_dim;
  const std::size_t ad = batch.action_dim;
  const double n = static_cast<double>(rows);
  actor.forward_batch(batch.states, rows, ws.actor_rows);
  stack_critic_inputs(ws.critic_inputs, batch.states, ws.actor_rows.output(), rows, sd, ad);
  critic.forward_batch(ws.critic_inputs, rows, ws.critic_rows);
  double objective = 0.0;
  for (double q : ws.critic_rows.output()) objective += q;

  ws.upstream.assign(rows, -1.0 / n);
  ws.input_grads.resize(rows * (sd + ad));
  critic.backward_batch(ws.critic_rows, ws.upstream, nullptr, ws.input_grads);
  // Keep only the action columns as the actor's upstream.
  ws.upstream.resize(rows * ad);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(ws.input_grads.data() + i * (sd + ad) + sd, ad, ws.upstream.data() + i * ad);
  }
  actor.backward_batch(ws.actor_rows, ws.upstream, &out.grads, {});
  out.objective = objective / n;
  return out;
}

double actor_update(Mlp& actor, AdamState& optimizer, const Mlp& critic, const Batch& batch,
                    double learning_rate, Workspace* scratch) {
  ActorGradient g = actor_gradient(actor, critic, batch, scratch);
  adam_step(actor, g.grads, optimizer, learning_rate);
  return g.objective;
}

}  // namespace dactor
