#include <doctest.h>

#include <cmath>
#include <vector>

#include "dactor/agents.hpp"
#include "dactor/properties.hpp"

using namespace dactor;

namespace {

/// Q(s, a) = bias + ws * s + wa * a for scalar s and a.
Mlp linear_critic(double bias, double ws, double wa) {
  Mlp q({2, 1});
  q.weight(0, 0, 0) = ws;
  q.weight(0, 0, 1) = wa;
  q.bias(0, 0) = bias;
  return q;
}

/// pi(s) = w * s + b, no squashing.
Mlp linear_actor(double w, double b) {
  Mlp pi({1, 1});
  pi.weight(0, 0, 0) = w;
  pi.bias(0, 0) = b;
  return pi;
}

const std::vector<double> kState{0.0};

}  // namespace

TEST_CASE("smooth_action clips the noise, then the action") {
  CHECK(smooth_action(std::vector<double>{0.3}, std::vector<double>{0.9}, 0.5, 1.0)[0] ==
        doctest::Approx(0.8));
  CHECK(smooth_action(std::vector<double>{0.9}, std::vector<double>{0.4}, 0.5, 1.0)[0] == 1.0);
  CHECK(smooth_action(std::vector<double>{0.0}, std::vector<double>{-2.0}, 0.5, 1.0)[0] == -0.5);
  CHECK_THROWS_AS(smooth_action(std::vector<double>{0.0}, std::vector<double>{}, 0.5, 1.0),
                  std::invalid_argument);
}

TEST_CASE("smoothed target actions use noise relative to the bound") {
  const Mlp pi = linear_actor(0.0, 0.0);
  TargetConfig cfg;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double a = smoothed_target_action(pi, kState, cfg, 2.0, rng)[0];
    CHECK(std::abs(a) <= 1.0);  // clip 0.5 * bound 2
  }
  cfg.target_noise = 0.0;
  CHECK(smoothed_target_action(pi, kState, cfg, 2.0, rng)[0] == 0.0);
}

TEST_CASE("target_datd3 worked example") {
  // a' = 0, a'' = 1:  Q1 = 1 + 2a -> (1, 3),  Q2 = 2 - 1.5a -> (2, 0.5)
  const std::vector<Mlp> critics{linear_critic(1.0, 0.0, 2.0), linear_critic(2.0, 0.0, -1.5)};
  const std::vector<double> a1{0.0}, a2{1.0};
  const ClippedPair q = clipped_values(critics, kState, a1, a2);
  CHECK(q.first == 1.0);
  CHECK(q.second == 0.5);
  CHECK(target_datd3(critics, kState, a1, a2) == 1.0);
  CHECK(soft_target(critics, kState, a1, a2, 0.0) == 1.0);
  CHECK(soft_target(critics, kState, a1, a2, 0.25) == 0.875);
}

TEST_CASE("soft combination") {
  CHECK(soft_combine(1.0, 0.5, 0.25) == 0.875);
  CHECK(soft_combine(0.5, 1.0, 0.25) == 0.875);
  CHECK(soft_combine(1.0, 0.5, 0.0) == 1.0);
  CHECK(soft_combine(2.0, 2.0, 0.75) == 2.0);
  CHECK_THROWS_AS(soft_combine(1.0, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(soft_combine(1.0, 0.5, -0.1), std::invalid_argument);
}

TEST_CASE("ddpg, td3 and daddpg targets") {
  const Mlp q = linear_critic(0.0, 0.0, 1.0);  // Q = a
  const std::vector<Mlp> actors{linear_actor(0.0, 0.7), linear_actor(0.0, -0.2)};
  CHECK(target_ddpg(q, actors[0], kState) == 0.7);
  CHECK(target_daddpg(q, actors, kState) == -0.2);
  const std::vector<Mlp> critics{q, linear_critic(0.1, 0.0, 0.5)};
  CHECK(target_td3(critics, actors[0], kState) == doctest::Approx(0.45));
  CHECK_THROWS_AS(target_td3(std::span<const Mlp>(critics.data(), 1), actors[0], kState),
                  std::invalid_argument);
}

TEST_CASE("estimator inequality suites") {
  CHECK(check_daddpg_below_ddpg(200, 7).ok());
  CHECK(check_datd3_above_td3(200, 7).ok());
  CHECK(check_soft_target(200, 7).ok());
}

TEST_CASE("critic loss worked example") {
  Mlp q1({2, 1});
  q1.bias(0, 0) = 2.0;
  Mlp q2({2, 1});
  q2.bias(0, 0) = 1.0;
  Batch b(1, 1, 1);
  const std::vector<double> y{1.5};
  const CriticLoss l = critic_loss(q1, b, y, &q2, 0.005);
  CHECK(l.loss == doctest::Approx(0.255).epsilon(1e-12));
  CHECK(l.td_loss == 0.25);
  CHECK(l.deviance == 1.0);
  // dL/db = 2 (Q1 - y) + 2 lambda (Q1 - Q2), with Q2 held fixed
  CHECK(l.grads.bias(0, 0) == doctest::Approx(2 * 0.5 + 2 * 0.005 * 1.0).epsilon(1e-12));

  const CriticLoss plain = critic_loss(q1, b, y, nullptr, 0.005);
  CHECK(plain.loss == 0.25);
  CHECK(plain.grads.bias(0, 0) == 1.0);

  const std::vector<double> bad{std::nan("")};
  CHECK_THROWS_AS(critic_loss(q1, b, bad, nullptr, 0.0), NumericalError);
  CHECK_THROWS_AS(critic_loss(q1, b, std::vector<double>{}, nullptr, 0.0), std::invalid_argument);
}

TEST_CASE("actor gradient through a linear critic Q = 3a") {
  Rng rng(2);
  const Mlp actor = Mlp::uniform_init({1, 6, 1}, OutputActivation::scaled_tanh(1.5), rng);
  const Mlp critic = linear_critic(0.0, 0.0, 3.0);
  Batch b(1, 1, 1);
  b.states[0] = 0.4;
  const ActorGradient g = actor_gradient(actor, critic, b);
  const GradientSet dpi = mlp_backward(actor, b.state(0), std::vector<double>{1.0});
  for (std::size_t p = 0; p < dpi.parameters().size(); ++p) {
    // stored gradient belongs to the minimized loss -Q
    CHECK(-g.grads.parameters()[p] == doctest::Approx(3.0 * dpi.parameters()[p]).epsilon(1e-12));
  }
  CHECK(g.objective == doctest::Approx(3.0 * actor.forward(b.state(0))[0]));
}

TEST_CASE("a small actor step does not decrease a concave critic's objective") {
  // Q(s, a) = -relu(a - 0.6) - relu(0.6 - a), peaked at a = 0.6.
  Mlp critic({2, 2, 1});
  critic.weight(0, 0, 1) = 1.0;
  critic.bias(0, 0) = -0.6;
  critic.weight(0, 1, 1) = -1.0;
  critic.bias(0, 1) = 0.6;
  critic.weight(1, 0, 0) = -1.0;
  critic.weight(1, 0, 1) = -1.0;

  Rng rng(3);
  Mlp actor = Mlp::uniform_init({1, 8, 1}, OutputActivation::scaled_tanh(1.5), rng);
  AdamState opt(actor);
  Batch b(16, 1, 1);
  for (double& s : b.states) s = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < b.size; ++i) REQUIRE(actor.forward(b.state(i))[0] < 0.55);
  const double before = actor_update(actor, opt, critic, b, 1e-4);
  CHECK(actor_gradient(actor, critic, b).objective > before);
}
