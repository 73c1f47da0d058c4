#include "dactor/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dactor {

// ---------------------------------------------------------------------------
// GoldMiner

MineRegion mine_region(double position) {
  using namespace goldminer;
  if (std::abs(position - kRightMine) <= kMineHalfWidth) return MineRegion::Right;
  if (std::abs(position - kLeftMine) <= kMineHalfWidth) return MineRegion::Left;
  return MineRegion::None;
}

GoldMinerState goldminer_reset() { return {}; }

StepResult goldminer_step(const GoldMinerState& state, double action, GoldMinerState& next) {
  using namespace goldminer;
  const double a = std::clamp(action, -kActionBound, kActionBound);
  next.position = std::clamp(state.position + a, kLeftBoundary, kRightBoundary);
  next.step_index = state.step_index + 1;

  StepResult out;
  out.next_state = {next.position};
  switch (mine_region(next.position)) {
    case MineRegion::Right: out.reward = kRightReward; break;
    case MineRegion::Left: out.reward = kLeftReward; break;
    case MineRegion::None: out.reward = 0.0; break;
  }
  out.done = next.step_index >= kEpisodeLength;
  return out;
}

void record_visit(VisitHistogram& hist, const GoldMinerState& state) {
  switch (mine_region(state.position)) {
    case MineRegion::Right: ++hist.right_mine_visits; break;
    case MineRegion::Left: ++hist.left_mine_visits; break;
    case MineRegion::None: ++hist.other_visits; break;
  }
}

EnvSpec GoldMinerEnv::spec() const {
  return {1, 1, goldminer::kActionBound, goldminer::kEpisodeLength};
}

std::vector<double> GoldMinerEnv::reset(Rng& /*rng*/) {
  state_ = goldminer_reset();
  return {state_.position};
}

StepResult GoldMinerEnv::step(std::span<const double> action) {
  if (action.size() != 1) throw std::invalid_argument("goldminer: action must have length 1");
  GoldMinerState next;
  StepResult r = goldminer_step(state_, action[0], next);
  state_ = next;
  return r;
}

void GoldMinerEnv::set_state(std::span<const double> state) {
  if (state.size() != 1) throw std::invalid_argument("goldminer: state must have length 1");
  state_.position = std::clamp(state[0], goldminer::kLeftBoundary, goldminer::kRightBoundary);
  state_.step_index = 0;
}

void GoldMinerEnv::record_visit(VisitHistogram& hist, std::span<const double> state) const {
  dactor::record_visit(hist, GoldMinerState{state[0], 0});
}

std::unique_ptr<Environment> GoldMinerEnv::clone() const {
  return std::make_unique<GoldMinerEnv>(*this);
}

// ---------------------------------------------------------------------------
// PointReach

PointReachState pointreach_reset(const PointReachConfig& cfg, Rng& rng) {
  PointReachState s;
  for (double& p : s.position) p = rng.uniform(-cfg.box, cfg.box);
  return s;
}

StepResult pointreach_step(const PointReachConfig& cfg, const PointReachState& state,
                           std::span<const double> action, PointReachState& next) {
  if (action.size() != 2) throw std::invalid_argument("pointreach: action must have length 2");
  for (std::size_t i = 0; i < 2; ++i) {
    const double v = std::clamp(action[i], -cfg.action_bound, cfg.action_bound);
    next.position[i] = std::clamp(state.position[i] + v, -cfg.box, cfg.box);
  }
  next.step_index = state.step_index + 1;
  StepResult out;
  out.next_state = {next.position[0], next.position[1]};
  out.reward = -std::hypot(next.position[0] - cfg.goal[0], next.position[1] - cfg.goal[1]);
  out.done = next.step_index >= cfg.episode_length;
  return out;
}

EnvSpec PointReachEnv::spec() const { return {2, 2, cfg_.action_bound, cfg_.episode_length}; }

std::vector<double> PointReachEnv::reset(Rng& rng) {
  state_ = pointreach_reset(cfg_, rng);
  return {state_.position[0], state_.position[1]};
}

StepResult PointReachEnv::step(std::span<const double> action) {
  PointReachState next;
  StepResult r = pointreach_step(cfg_, state_, action, next);
  state_ = next;
  return r;
}

void PointReachEnv::set_state(std::span<const double> state) {
  if (state.size() != 2) throw std::invalid_argument("pointreach: state must have length 2");
  for (std::size_t i = 0; i < 2; ++i) state_.position[i] = std::clamp(state[i], -cfg_.box, cfg_.box);
  state_.step_index = 0;
}

std::unique_ptr<Environment> PointReachEnv::clone() const {
  return std::make_unique<PointReachEnv>(*this);
}

// ---------------------------------------------------------------------------

std::unique_ptr<Environment> make_environment(std::string_view name) {
  if (name == "goldminer") return std::make_unique<GoldMinerEnv>();
  if (name == "pointreach") return std::make_unique<PointReachEnv>();
  throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

std::vector<std::string> environment_names() { return {"goldminer", "pointreach"}; }

}  // namespace dactor
