#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace dactor {

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t passed = 0;
  double worst = 0.0;  // suite-specific: largest violation or relative error seen
  double seconds = 0.0;
  std::string note;

  bool ok() const { return cases > 0 && passed == cases; }
};

/// DADDPG's target never exceeds DDPG's on random (critic, actor pair, state) triples.
SuiteResult check_daddpg_below_ddpg(std::size_t cases, std::uint64_t seed);

/// DATD3's target never falls below TD3's when both use the same smoothed actions.
SuiteResult check_datd3_above_td3(std::size_t cases, std::uint64_t seed);

/// soft_target at nu = 0 equals target_datd3 bitwise, and is non-increasing over
/// nu in {0, 0.25, 0.5, 0.75}.
SuiteResult check_soft_target(std::size_t cases, std::uint64_t seed);

/// Backpropagated gradients of random networks and of critic_loss against central finite
/// differences. An entry passes when |g - fd| <= max(rel_tol * max(|g|, |fd|), abs_floor).
/// Probes whose +-h evaluations straddle a ReLU kink trigger a redraw of the inputs.
SuiteResult check_gradients(std::size_t networks, std::uint64_t seed, double h = 1e-5,
                            double rel_tol = 1e-4, double abs_floor = 1e-8);

}  // namespace dactor
