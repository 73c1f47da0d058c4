#include <cmath>

#include "dactor/harness.hpp"

namespace dactor {

VisitHistogram RunRecord::cumulative_visits() const {
  VisitHistogram total;
  for (const VisitRow& row : visits) {
    total.left_mine_visits += row.visits.left_mine_visits;
    total.right_mine_visits += row.visits.right_mine_visits;
    total.other_visits += row.visits.other_visits;
  }
  return total;
}

namespace {

RunConfig validated(RunConfig cfg) {
  cfg.validate();
  return cfg;
}

std::unique_ptr<AgentState> build_agent(const RunConfig& cfg, const EnvSpec& spec) {
  Rng init = Rng::stream(cfg.seed, "init");
  return std::make_unique<AgentState>(cfg.agent_config(spec), init);
}

}  // namespace

TrainingSession::TrainingSession(RunConfig cfg)
    : cfg_(validated(std::move(cfg))),
      env_(make_environment(cfg_.env)),
      agent_(build_agent(cfg_, env_->spec())),
      buffer_(cfg_.buffer_capacity, env_->spec().state_dim, env_->spec().action_dim),
      env_rng_(Rng::stream(cfg_.seed, "env")),
      action_rng_(Rng::stream(cfg_.seed, "action_noise")),
      target_rng_(Rng::stream(cfg_.seed, "target_noise")),
      sampling_rng_(Rng::stream(cfg_.seed, "sampling")),
      bias_rng_(Rng::stream(cfg_.seed, "bias")) {
  record_.config = cfg_;
  state_ = env_->reset(env_rng_);
}

void TrainingSession::step() {
  if (finished()) return;
  const EnvSpec spec = env_->spec();

  std::vector<double> action;
  if (steps_done_ < cfg_.warmup_steps) {
    action.resize(spec.action_dim);
    for (double& a : action) a = action_rng_.uniform(-spec.action_bound, spec.action_bound);
  } else {
    action = select_action(*agent_, state_, cfg_.exploration, action_rng_);
  }

  StepResult r = env_->step(action);
  if (!std::isfinite(r.reward)) throw NumericalError("environment returned a non-finite reward");
  // Episodes end only by time limit, so every transition bootstraps.
  buffer_.push(state_, action, r.reward, r.next_state, false);
  if (env_->tracks_visits()) env_->record_visit(episode_visits_, r.next_state);
  state_ = std::move(r.next_state);
  if (r.done) {
    close_episode();
    state_ = env_->reset(env_rng_);
  }

  if (steps_done_ >= cfg_.warmup_steps) {
    train_step(*agent_, buffer_, TrainingRngs{sampling_rng_, target_rng_});
  }
  ++steps_done_;

  if (steps_done_ % cfg_.eval_interval == 0) record_.evaluations.push_back(evaluate());
  if (cfg_.bias_interval > 0 && steps_done_ > cfg_.warmup_steps &&
      steps_done_ % cfg_.bias_interval == 0) {
    const std::size_t n = std::min(cfg_.bias_states, buffer_.size());
    const BiasReport b = estimate_bias(*agent_, buffer_, *env_, n, cfg_.bias_horizon, bias_rng_);
    record_.bias.push_back({steps_done_, b.mean_estimate, b.mean_true_value, b.bias});
  }
}

void TrainingSession::run() {
  while (!finished()) step();
}

void TrainingSession::close_episode() {
  if (env_->tracks_visits()) record_.visits.push_back({episode_, episode_visits_});
  episode_visits_ = {};
  ++episode_;
}

EvalRow TrainingSession::evaluate() const {
  std::unique_ptr<Environment> env = env_->clone();
  Rng rng = Rng::stream(cfg_.seed, "eval");
  std::vector<double> returns;
  returns.reserve(cfg_.eval_episodes);
  for (std::size_t e = 0; e < cfg_.eval_episodes; ++e) {
    std::vector<double> s = env->reset(rng);
    double total = 0.0;
    for (;;) {
      StepResult r = env->step(greedy_action(*agent_, s));
      total += r.reward;
      s = std::move(r.next_state);
      if (r.done) break;
    }
    returns.push_back(total);
  }
  double mean = 0.0;
  for (double g : returns) mean += g;
  mean /= static_cast<double>(returns.size());
  double var = 0.0;
  for (double g : returns) var += (g - mean) * (g - mean);
  var /= static_cast<double>(returns.size());
  if (!std::isfinite(mean)) throw NumericalError("evaluation produced a non-finite return");
  return {steps_done_, mean, std::sqrt(var)};
}

RunRecord TrainingSession::finish() {
  if (env_->tracks_visits() && episode_visits_.total() > 0) {
    record_.visits.push_back({episode_, episode_visits_});
    episode_visits_ = {};
  }
  record_.final_score = record_.evaluations.empty() ? 0.0 : record_.evaluations.back().mean_return;
  if (agent_->critics.size() == 2 && !buffer_.empty()) {
    Rng rng = Rng::stream(cfg_.seed, "deviance");
    const Batch batch = buffer_.sample(cfg_.deviance_samples, rng);
    record_.final_critic_deviance = critic_deviance(*agent_, batch).absolute_mean;
  }
  return record_;
}

RunRecord run_training(const RunConfig& cfg) {
  TrainingSession session(cfg);
  session.run();
  return session.finish();
}

std::vector<double> smooth(std::span<const double> series, std::size_t window) {
  if (window == 0) throw std::invalid_argument("smooth: window must be at least 1");
  std::vector<double> out(series.size());
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::size_t first = k + 1 >= window ? k + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t j = first; j <= k; ++j) sum += series[j];
    out[k] = sum / static_cast<double>(k - first + 1);
  }
  return out;
}

Aggregate aggregate(std::span<const RunRecord> records) {
  Aggregate agg;
  if (records.empty()) return agg;
  const auto& grid = records.front().evaluations;
  for (const RunRecord& r : records) {
    if (r.evaluations.size() != grid.size()) {
      throw std::invalid_argument("aggregate: records have different evaluation counts");
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (r.evaluations[k].step != grid[k].step) {
        throw std::invalid_argument("aggregate: records have different evaluation steps");
      }
    }
  }
  const auto n = static_cast<double>(records.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double mean = 0.0;
    for (const RunRecord& r : records) mean += r.evaluations[k].mean_return;
    mean /= n;
    double var = 0.0;
    for (const RunRecord& r : records) {
      const double d = r.evaluations[k].mean_return - mean;
      var += d * d;
    }
    agg.steps.push_back(grid[k].step);
    agg.mean.push_back(mean);
    agg.std.push_back(std::sqrt(var / n));
  }
  for (const RunRecord& r : records) agg.final_scores.push_back(r.final_score);
  for (double s : agg.final_scores) agg.final_mean += s;
  agg.final_mean /= n;
  for (double s : agg.final_scores) agg.final_std += (s - agg.final_mean) * (s - agg.final_mean);
  agg.final_std = std::sqrt(agg.final_std / n);
  return agg;
}

}  // namespace dactor
