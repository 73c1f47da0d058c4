#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dactor/agents.hpp"

namespace dactor {

// ---------------------------------------------------------------------------
// Names

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

constexpr Algorithm kAllAlgorithms[] = {Algorithm::DDPG,  Algorithm::TD3,  Algorithm::DADDPG,
                                        Algorithm::DATD3, Algorithm::CTD3, Algorithm::DARC};

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::DDPG: return "ddpg";
    case Algorithm::TD3: return "td3";
    case Algorithm::DADDPG: return "daddpg";
    case Algorithm::DATD3: return "datd3";
    case Algorithm::CTD3: return "ctd3";
    case Algorithm::DARC: return "darc";
  }
  return "?";
}

std::string_view to_string(UpdateScheme s) { return s == UpdateScheme::Cross ? "cross" : "both"; }

std::string_view to_string(ExplorationMode m) {
  return m == ExplorationMode::MaxQ ? "maxq" : "first_actor";
}

Algorithm parse_algorithm(std::string_view name) {
  const std::string n = lower(name);
  for (Algorithm a : kAllAlgorithms) {
    if (to_string(a) == n) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

UpdateScheme parse_update_scheme(std::string_view name) {
  const std::string n = lower(name);
  if (n == "cross") return UpdateScheme::Cross;
  if (n == "both") return UpdateScheme::Both;
  throw std::invalid_argument("unknown update scheme '" + std::string(name) + "'");
}

ExplorationMode parse_exploration_mode(std::string_view name) {
  const std::string n = lower(name);
  if (n == "maxq") return ExplorationMode::MaxQ;
  if (n == "first_actor" || n == "firstactor") return ExplorationMode::FirstActor;
  throw std::invalid_argument("unknown exploration mode '" + std::string(name) + "'");
}

std::vector<std::string> algorithm_names() {
  std::vector<std::string> out;
  for (Algorithm a : kAllAlgorithms) out.emplace_back(to_string(a));
  return out;
}

std::size_t actor_count(Algorithm a) {
  return (a == Algorithm::DDPG || a == Algorithm::TD3) ? 1 : 2;
}

std::size_t critic_count(Algorithm a) {
  return (a == Algorithm::DDPG || a == Algorithm::DADDPG) ? 1 : 2;
}

// ---------------------------------------------------------------------------
// Configuration

void TargetConfig::validate() const {
  if (!(nu >= 0.0 && nu < 1.0)) throw std::invalid_argument("nu must lie in [0, 1)");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (!(target_noise >= 0.0)) throw std::invalid_argument("target_noise must be non-negative");
  if (!(noise_clip > 0.0)) throw std::invalid_argument("noise_clip must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in (0, 1]");
}

void ExplorationConfig::validate() const {
  if (!(action_noise >= 0.0)) throw std::invalid_argument("action_noise must be non-negative");
}

void AgentConfig::validate() const {
  target.validate();
  exploration.validate();
  if (env.state_dim == 0 || env.action_dim == 0) {
    throw std::invalid_argument("environment dimensions must be positive");
  }
  if (!(env.action_bound > 0.0)) throw std::invalid_argument("action bound must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (policy_delay == 0) throw std::invalid_argument("policy_delay must be positive");
}

AgentState::AgentState(AgentConfig cfg, Rng& init_rng) : config(std::move(cfg)) {
  config.validate();
  std::vector<std::size_t> actor_sizes{config.env.state_dim};
  actor_sizes.insert(actor_sizes.end(), config.actor_hidden.begin(), config.actor_hidden.end());
  actor_sizes.push_back(config.env.action_dim);
  std::vector<std::size_t> critic_sizes{config.env.state_dim + config.env.action_dim};
  critic_sizes.insert(critic_sizes.end(), config.critic_hidden.begin(), config.critic_hidden.end());
  critic_sizes.push_back(1);

  const auto squash = OutputActivation::scaled_tanh(config.env.action_bound);
  for (std::size_t i = 0; i < actor_count(config.algorithm); ++i) {
    actors.push_back(Mlp::uniform_init(actor_sizes, squash, init_rng));
  }
  for (std::size_t i = 0; i < critic_count(config.algorithm); ++i) {
    critics.push_back(Mlp::uniform_init(critic_sizes, OutputActivation::identity(), init_rng));
  }
  target_actors = actors;
  target_critics = critics;
  for (const Mlp& a : actors) actor_optimizers.emplace_back(a);
  for (const Mlp& c : critics) critic_optimizers.emplace_back(c);
}

// ---------------------------------------------------------------------------
// Shared evaluation helpers

namespace {

double q_eval(const Mlp& critic, std::span<const double> state, std::span<const double> action,
              Workspace& ws) {
  ws.critic_input.resize(state.size() + action.size());
  std::copy(state.begin(), state.end(), ws.critic_input.begin());
  std::copy(action.begin(), action.end(),
            ws.critic_input.begin() + static_cast<std::ptrdiff_t>(state.size()));
  return critic.forward_scalar(ws.critic_input, ws.aux_trace);
}

std::vector<double> act(const Mlp& actor, std::span<const double> state, Workspace& ws) {
  actor.forward(state, ws.actor_trace);
  const auto out = ws.actor_trace.output();
  return {out.begin(), out.end()};
}

double min_over_critics(std::span<const Mlp> critics, std::span<const double> state,
                        std::span<const double> action, Workspace& ws) {
  double best = q_eval(critics[0], state, action, ws);
  for (std::size_t j = 1; j < critics.size(); ++j) {
    best = std::min(best, q_eval(critics[j], state, action, ws));
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Acting

std::size_t choose_actor(const AgentState& agent, std::span<const double> state,
                         ExplorationMode mode) {
  if (agent.actors.size() == 1 || mode == ExplorationMode::FirstActor) return 0;
  Workspace& ws = agent.scratch;
  const std::vector<double> a1 = act(agent.actors[0], state, ws);
  const std::vector<double> a2 = act(agent.actors[1], state, ws);
  const double score1 = min_over_critics(agent.critics, state, a1, ws);
  const double score2 = min_over_critics(agent.critics, state, a2, ws);
  return score2 > score1 ? 1 : 0;
}

std::vector<double> select_action(const AgentState& agent, std::span<const double> state,
                                  const ExplorationConfig& expl, Rng& rng) {
  const std::size_t idx = choose_actor(agent, state, expl.mode);
  std::vector<double> a = act(agent.actors[idx], state, agent.scratch);
  const double bound = agent.config.env.action_bound;
  if (expl.action_noise > 0.0) {
    for (double& x : a) x = std::clamp(x + rng.normal(0.0, expl.action_noise * bound), -bound, bound);
  }
  return a;
}

std::vector<double> greedy_action(const AgentState& agent, std::span<const double> state) {
  const std::size_t idx = choose_actor(agent, state, ExplorationMode::MaxQ);
  return act(agent.actors[idx], state, agent.scratch);
}

double estimator_value(const AgentState& agent, std::span<const double> s) {
  Workspace& ws = agent.scratch;
  const auto& cfg = agent.config;
  const std::span<const Mlp> critics = agent.target_critics;
  const std::vector<double> a1 = act(agent.target_actors[0], s, ws);
  switch (cfg.algorithm) {
    case Algorithm::DDPG: return q_eval(critics[0], s, a1, ws);
    case Algorithm::TD3:
    case Algorithm::CTD3: return min_over_critics(critics, s, a1, ws);
    case Algorithm::DADDPG: {
      const double q1 = q_eval(critics[0], s, a1, ws);
      if (!cfg.value_correction) return q1;
      const std::vector<double> a2 = act(agent.target_actors[1], s, ws);
      return std::min(q1, q_eval(critics[0], s, a2, ws));
    }
    case Algorithm::DATD3:
    case Algorithm::DARC: {
      const double q1 = min_over_critics(critics, s, a1, ws);
      if (!cfg.value_correction) return q1;
      const std::vector<double> a2 = act(agent.target_actors[1], s, ws);
      const double q2 = min_over_critics(critics, s, a2, ws);
      return cfg.algorithm == Algorithm::DATD3 ? std::max(q1, q2)
                                               : soft_combine(q1, q2, cfg.target.nu);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Targets {
  std::vector<double> y;
  double estimate_sum = 0.0;
};

/// Elementwise min over the critics' batched outputs for the critic inputs held in
/// ws.critic_inputs, written to `out`.
void min_over_critics_rows(std::span<const Mlp> critics, std::size_t rows, Workspace& ws,
                           std::vector<double>& out) {
  critics[0].forward_batch(ws.critic_inputs, rows, ws.critic_rows);
  out.assign(ws.critic_rows.output().begin(), ws.critic_rows.output().end());
  for (std::size_t j = 1; j < critics.size(); ++j) {
    critics[j].forward_batch(ws.critic_inputs, rows, ws.critic_rows);
    const auto q = ws.critic_rows.output();
    for (std::size_t i = 0; i < rows; ++i) out[i] = std::min(out[i], q[i]);
  }
}

/// Bellman targets r + gamma (1 - d) V-hat(s') for the batch held in ws.batch. `pair` selects
/// the bootstrapping actor for CTD3. The smoothing noise is one draw per row, shared by both
/// actors' target actions.
Targets compute_targets(const AgentState& agent, std::size_t pair, Rng& noise_rng) {
  Workspace& ws = agent.scratch;
  const Batch& b = ws.batch;
  const auto& cfg = agent.config;
  const TargetConfig& tc = cfg.target;
  const double bound = cfg.env.action_bound;
  const std::span<const Mlp> critics = agent.target_critics;
  const bool smoothing = cfg.algorithm != Algorithm::DDPG;
  const std::size_t rows = b.size;
  const std::size_t ad = cfg.env.action_dim;
  const std::size_t sd = cfg.env.state_dim;

  const bool need_first = !(cfg.algorithm == Algorithm::CTD3 && pair == 1);
  bool need_second = false;
  switch (cfg.algorithm) {
    case Algorithm::CTD3: need_second = pair == 1; break;
    case Algorithm::DADDPG:
    case Algorithm::DATD3:
    case Algorithm::DARC: need_second = cfg.value_correction; break;
    default: break;
  }

  std::vector<double> noise(rows * ad, 0.0);
  if (smoothing && tc.target_noise > 0.0) {
    for (double& n : noise) n = noise_rng.normal(0.0, tc.target_noise * bound);
  }
  auto target_actions = [&](const Mlp& actor) {
    actor.forward_batch(b.next_states, rows, ws.actor_rows);
    std::vector<double> a(ws.actor_rows.output().begin(), ws.actor_rows.output().end());
    if (smoothing) {
      const double clip = tc.noise_clip * bound;
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::clamp(a[i] + std::clamp(noise[i], -clip, clip), -bound, bound);
      }
    }
    return a;
  };
  auto values = [&](const std::vector<double>& actions, bool clipped) {
    stack_critic_inputs(ws.critic_inputs, b.next_states, actions, rows, sd, ad);
    std::vector<double> q;
    min_over_critics_rows(clipped ? critics : critics.first(1), rows, ws, q);
    return q;
  };

  std::vector<double> v;
  if (cfg.algorithm == Algorithm::DDPG || cfg.algorithm == Algorithm::DADDPG) {
    // Single critic; DADDPG's correction takes the min across both actors.
    v = values(target_actions(agent.target_actors[0]), false);
    if (need_second) {
      const std::vector<double> q2 = values(target_actions(agent.target_actors[1]), false);
      for (std::size_t i = 0; i < rows; ++i) v[i] = std::min(v[i], q2[i]);
    }
  } else {
    std::vector<double> q1;
    std::vector<double> q2;
    if (need_first) q1 = values(target_actions(agent.target_actors[0]), true);
    if (need_second) q2 = values(target_actions(agent.target_actors[1]), true);
    if (cfg.algorithm == Algorithm::CTD3) {
      v = pair == 0 ? q1 : q2;
    } else if (!need_second) {
      v = q1;
    } else {
      v.resize(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        v[i] = cfg.algorithm == Algorithm::DATD3 ? std::max(q1[i], q2[i])
                                                 : soft_combine(q1[i], q2[i], tc.nu);
      }
    }
  }

  Targets out;
  out.y.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::isfinite(v[i])) throw NumericalError("non-finite target value estimate");
    out.estimate_sum += v[i];
    out.y[i] = b.rewards[i] + tc.gamma * (1.0 - b.dones[i]) * v[i];
  }
  return out;
}

class StepRecorder {
 public:
  explicit StepRecorder(StepMetrics& m) : m_(m) {}

  void critic(std::size_t i, const CriticLoss& loss) {
    m_.updated_critics.push_back(i);
    m_.critic_loss += loss.loss;
    m_.td_loss += loss.td_loss;
    m_.deviance += loss.deviance;
  }
  void actor(std::size_t i, double objective) {
    m_.updated_actors.push_back(i);
    m_.actor_objective += objective;
  }
  void targets(Targets&& t) {
    estimate_sum_ += t.estimate_sum;
    estimate_count_ += t.y.size();
    m_.targets.push_back(std::move(t.y));
  }
  void finish() {
    if (const auto n = m_.updated_critics.size(); n > 0) {
      m_.critic_loss /= static_cast<double>(n);
      m_.td_loss /= static_cast<double>(n);
      m_.deviance /= static_cast<double>(n);
    }
    if (const auto n = m_.updated_actors.size(); n > 0) {
      m_.actor_objective /= static_cast<double>(n);
    }
    if (estimate_count_ > 0) m_.estimate_mean = estimate_sum_ / static_cast<double>(estimate_count_);
  }

 private:
  StepMetrics& m_;
  double estimate_sum_ = 0.0;
  std::size_t estimate_count_ = 0;
};

void update_critic(AgentState& agent, std::size_t i, std::span<const double> y, double lambda,
                   StepRecorder& rec) {
  const Mlp* other = agent.critics.size() == 2 ? &agent.critics[1 - i] : nullptr;
  CriticLoss loss =
      critic_loss(agent.critics[i], agent.scratch.batch, y, other, lambda, &agent.scratch);
  adam_step(agent.critics[i], loss.grads, agent.critic_optimizers[i], agent.config.learning_rate);
  rec.critic(i, loss);
}

void update_actor(AgentState& agent, std::size_t actor, std::size_t critic, StepRecorder& rec) {
  const double objective =
      actor_update(agent.actors[actor], agent.actor_optimizers[actor], agent.critics[critic],
                   agent.scratch.batch, agent.config.learning_rate, &agent.scratch);
  rec.actor(actor, objective);
}

void soft_update_actor(AgentState& agent, std::size_t i) {
  soft_update(agent.target_actors[i], agent.actors[i], agent.config.target.tau);
}
void soft_update_critic(AgentState& agent, std::size_t i) {
  soft_update(agent.target_critics[i], agent.critics[i], agent.config.target.tau);
}

/// Sample, bootstrap, and update critic i, actor i, and pair i's targets.
void update_pair(AgentState& agent, std::size_t i, double lambda, const ReplayBuffer& buffer,
                 TrainingRngs rngs, StepRecorder& rec) {
  buffer.sample_into(agent.scratch.batch, agent.config.batch_size, rngs.sampling);
  Targets t = compute_targets(agent, i, rngs.target_noise);
  update_critic(agent, i, t.y, lambda, rec);
  update_actor(agent, i, i, rec);
  soft_update_critic(agent, i);
  soft_update_actor(agent, i);
  rec.targets(std::move(t));
}

}  // namespace

StepMetrics train_step(AgentState& agent, const ReplayBuffer& buffer, TrainingRngs rngs) {
  if (buffer.empty()) throw NotReady("train_step: replay buffer is empty");
  const auto& cfg = agent.config;
  const std::uint64_t t = agent.step_counter;
  const std::size_t parity = static_cast<std::size_t>(t % 2);

  StepMetrics metrics;
  metrics.step_index = t;
  StepRecorder rec(metrics);
  Batch& batch = agent.scratch.batch;

  switch (cfg.algorithm) {
    case Algorithm::DDPG: {
      buffer.sample_into(batch, cfg.batch_size, rngs.sampling);
      Targets y = compute_targets(agent, 0, rngs.target_noise);
      update_critic(agent, 0, y.y, 0.0, rec);
      update_actor(agent, 0, 0, rec);
      soft_update_critic(agent, 0);
      soft_update_actor(agent, 0);
      rec.targets(std::move(y));
      break;
    }
    case Algorithm::TD3: {
      buffer.sample_into(batch, cfg.batch_size, rngs.sampling);
      Targets y = compute_targets(agent, 0, rngs.target_noise);
      update_critic(agent, 0, y.y, 0.0, rec);
      update_critic(agent, 1, y.y, 0.0, rec);
      if (t % cfg.policy_delay == 0) {
        update_actor(agent, 0, 0, rec);
        soft_update_critic(agent, 0);
        soft_update_critic(agent, 1);
        soft_update_actor(agent, 0);
      }
      rec.targets(std::move(y));
      break;
    }
    case Algorithm::DADDPG: {
      buffer.sample_into(batch, cfg.batch_size, rngs.sampling);
      Targets y = compute_targets(agent, 0, rngs.target_noise);
      update_critic(agent, 0, y.y, 0.0, rec);
      update_actor(agent, parity, 0, rec);
      if (parity == 0) soft_update_critic(agent, 0);
      soft_update_actor(agent, parity);
      rec.targets(std::move(y));
      break;
    }
    case Algorithm::DATD3:
      for (std::size_t i = 0; i < 2; ++i) update_pair(agent, i, 0.0, buffer, rngs, rec);
      break;
    case Algorithm::CTD3:
    case Algorithm::DARC: {
      const double lambda = cfg.algorithm == Algorithm::DARC ? cfg.target.lambda : 0.0;
      if (cfg.update_scheme == UpdateScheme::Cross) {
        update_pair(agent, parity, lambda, buffer, rngs, rec);
      } else {
        for (std::size_t i = 0; i < 2; ++i) update_pair(agent, i, lambda, buffer, rngs, rec);
      }
      break;
    }
  }
  rec.finish();
  agent.step_counter += 1;
  return metrics;
}

}  // namespace dactor
