#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dactor/rng.hpp"

namespace dactor {

struct EnvSpec {
  std::size_t state_dim = 1;
  std::size_t action_dim = 1;
  double action_bound = 1.0;
  std::size_t episode_length = 1;
};

struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  bool done = false;  // time-limit truncation
};

/// Per-episode counts of where the agent stood after each step.
struct VisitHistogram {
  std::size_t left_mine_visits = 0;
  std::size_t right_mine_visits = 0;
  std::size_t other_visits = 0;

  std::size_t total() const { return left_mine_visits + right_mine_visits + other_visits; }
  bool operator==(const VisitHistogram&) const = default;
};

// ---------------------------------------------------------------------------
// GoldMiner: 1-D track on [-4, 5], start at 0, mines centred at -3 (+1) and 4 (+4).

namespace goldminer {
inline constexpr double kLeftBoundary = -4.0;
inline constexpr double kRightBoundary = 5.0;
inline constexpr double kLeftMine = -3.0;
inline constexpr double kRightMine = 4.0;
inline constexpr double kMineHalfWidth = 0.5;
inline constexpr double kLeftReward = 1.0;
inline constexpr double kRightReward = 4.0;
inline constexpr double kActionBound = 1.5;
inline constexpr std::size_t kEpisodeLength = 200;
}  // namespace goldminer

struct GoldMinerState {
  double position = 0.0;
  std::size_t step_index = 0;
  bool operator==(const GoldMinerState&) const = default;
};

enum class MineRegion { Left, Right, None };

MineRegion mine_region(double position);
GoldMinerState goldminer_reset();
/// Clips the action to [-1.5, 1.5], moves, clamps to [-4, 5]. `next` receives the new state.
StepResult goldminer_step(const GoldMinerState& state, double action, GoldMinerState& next);
void record_visit(VisitHistogram& hist, const GoldMinerState& state);

// ---------------------------------------------------------------------------
// PointReach: 2-D point mass, velocity actions, reward -||p - goal||.

struct PointReachConfig {
  double box = 2.0;           // positions live in [-box, box]^2
  double action_bound = 0.2;  // per-axis velocity limit
  std::array<double, 2> goal{0.0, 0.0};
  std::size_t episode_length = 100;
};

struct PointReachState {
  std::array<double, 2> position{0.0, 0.0};
  std::size_t step_index = 0;
};

PointReachState pointreach_reset(const PointReachConfig& cfg, Rng& rng);
StepResult pointreach_step(const PointReachConfig& cfg, const PointReachState& state,
                           std::span<const double> action, PointReachState& next);

// ---------------------------------------------------------------------------
// Uniform interface used by the training loop.

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual EnvSpec spec() const = 0;
  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual StepResult step(std::span<const double> action) = 0;

  /// Places the environment at an arbitrary observed state with a fresh step budget.
  virtual bool supports_set_state() const { return true; }
  virtual void set_state(std::span<const double> state) = 0;

  /// Adds one visit for `state` when the environment has visit regions.
  virtual bool tracks_visits() const { return false; }
  virtual void record_visit(VisitHistogram& /*hist*/, std::span<const double> /*state*/) const {}

  virtual std::unique_ptr<Environment> clone() const = 0;
};

class GoldMinerEnv final : public Environment {
 public:
  std::string name() const override { return "goldminer"; }
  EnvSpec spec() const override;
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action) override;
  void set_state(std::span<const double> state) override;
  bool tracks_visits() const override { return true; }
  void record_visit(VisitHistogram& hist, std::span<const double> state) const override;
  std::unique_ptr<Environment> clone() const override;

  const GoldMinerState& state() const { return state_; }

 private:
  GoldMinerState state_;
};

class PointReachEnv final : public Environment {
 public:
  explicit PointReachEnv(PointReachConfig cfg = {}) : cfg_(cfg) {}

  std::string name() const override { return "pointreach"; }
  EnvSpec spec() const override;
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action) override;
  void set_state(std::span<const double> state) override;
  std::unique_ptr<Environment> clone() const override;

  const PointReachState& state() const { return state_; }
  const PointReachConfig& config() const { return cfg_; }

 private:
  PointReachConfig cfg_;
  PointReachState state_;
};

/// "goldminer" or "pointreach"; throws std::invalid_argument otherwise.
std::unique_ptr<Environment> make_environment(std::string_view name);
std::vector<std::string> environment_names();

}  // namespace dactor
