#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dactor/diagnostics.hpp"

using namespace dactor;

namespace {

AgentState make_agent(Algorithm algo, std::uint64_t seed) {
  AgentConfig cfg;
  cfg.algorithm = algo;
  cfg.env = GoldMinerEnv().spec();
  cfg.actor_hidden = {16};
  cfg.critic_hidden = {16};
  Rng rng(seed);
  return AgentState(cfg, rng);
}

/// Critic whose value depends on the state only: Q(s, a) = w * s + b.
Mlp state_critic(double w, double b) {
  Mlp q({2, 1});
  q.weight(0, 0, 0) = w;
  q.bias(0, 0) = b;
  return q;
}

}  // namespace

TEST_CASE("critic deviance worked example") {
  AgentState agent = make_agent(Algorithm::TD3, 1);
  agent.critics[0] = state_critic(1.0, 0.0);   // Q1 = s -> [1, 2]
  agent.critics[1] = state_critic(1.0, -1.0);  // Q2 = s - 1 -> [0, 1]
  Batch b(2, 1, 1);
  b.states = {1.0, 2.0};
  const DevianceReport d = critic_deviance(agent, b);
  CHECK(d.signed_mean == 1.0);
  CHECK(d.absolute_mean == 1.0);
  std::swap(agent.critics[0], agent.critics[1]);
  CHECK(critic_deviance(agent, b).signed_mean == -1.0);

  const AgentState single = make_agent(Algorithm::DDPG, 2);
  CHECK_THROWS_AS(critic_deviance(single, b), Unsupported);
}

TEST_CASE("deviance reduction and improvement formulas") {
  CHECK(100.0 * deviance_reduction(1.6504, 0.6062) == doctest::Approx(63.27).epsilon(1e-4));
  CHECK(std::abs(100.0 * deviance_reduction(1.6504, 0.6062) - 63.27) < 0.01);
  CHECK_THROWS_AS(deviance_reduction(0.0, 1.0), std::domain_error);

  const std::vector<double> d{100.0, 200.0}, a{150.0, 300.0};
  const Improvement imp = improvement_metric(d, a);
  CHECK(imp.relative == 0.5);
  CHECK(imp.percent == 150.0);
  CHECK(improvement_metric(d, d).percent == 100.0);
  CHECK_THROWS_AS(improvement_metric(d, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(improvement_metric(std::vector<double>{0.0}, std::vector<double>{1.0}),
                  std::domain_error);
}

TEST_CASE("bias estimate matches an independently scripted goldminer rollout") {
  const AgentState agent = make_agent(Algorithm::DADDPG, 3);
  const GoldMinerEnv env;
  const double gamma = agent.config.target.gamma;
  Batch states(3, 1, 1);
  states.states = {0.0, 3.9, -2.2};

  double expected_truth = 0.0;
  double expected_estimate = 0.0;
  for (double start : states.states) {
    double x = start;
    double g = 0.0;
    double disc = 1.0;
    for (int t = 0; t < 200; ++t) {
      const double a = std::clamp(greedy_action(agent, std::vector<double>{x})[0], -1.5, 1.5);
      x = std::clamp(x + a, -4.0, 5.0);
      const double r = std::abs(x - 4.0) <= 0.5 ? 4.0 : (std::abs(x + 3.0) <= 0.5 ? 1.0 : 0.0);
      g += disc * r;
      disc *= gamma;
    }
    expected_truth += g / 3.0;
    const std::vector<double> s{start};
    const std::vector<double> a1 = agent.target_actors[0].forward(s);
    const std::vector<double> a2 = agent.target_actors[1].forward(s);
    expected_estimate += std::min(critic_value(agent.target_critics[0], s, a1),
                                  critic_value(agent.target_critics[0], s, a2)) / 3.0;
  }
  const BiasReport r = estimate_bias_on(agent, states, env, 200);
  CHECK(std::abs(r.mean_true_value - expected_truth) < 1e-9);
  CHECK(std::abs(r.mean_estimate - expected_estimate) < 1e-9);
  CHECK(r.bias == r.mean_estimate - r.mean_true_value);
  CHECK(r.n_states == 3);
}

TEST_CASE("estimate_bias sampling preconditions") {
  const AgentState agent = make_agent(Algorithm::DDPG, 4);
  const GoldMinerEnv env;
  ReplayBuffer buf(10, 1, 1);
  Rng rng(1);
  CHECK_THROWS_AS(estimate_bias(agent, buf, env, 5, 10, rng), NotReady);
  buf.push(std::vector<double>{0.0}, std::vector<double>{0.0}, 0.0, std::vector<double>{0.0}, false);
  CHECK_THROWS_AS(estimate_bias(agent, buf, env, 0, 10, rng), std::invalid_argument);
  CHECK(estimate_bias(agent, buf, env, 1, 10, rng).n_states == 1);
}

TEST_CASE("error triple") {
  const AgentState agent = make_agent(Algorithm::DARC, 5);
  Batch b(8, 1, 1);
  Rng rng(6);
  for (double& s : b.states) s = rng.uniform(-4.0, 5.0);
  for (double& a : b.actions) a = rng.uniform(-1.5, 1.5);
  const ErrorTriple coarse = error_triple(agent, b, 11);
  CHECK(coarse.value_error >= 0.0);
  CHECK(coarse.policy_execution_error >= 0.0);
  CHECK(coarse.critic_deviance_error > 0.0);

  // Refining the grid only adds candidate actions, so the measured value error can only grow.
  double prev = coarse.value_error;
  for (std::size_t res : {21u, 41u, 81u}) {
    const double v = error_triple(agent, b, res).value_error;
    CHECK(v >= prev);
    prev = v;
  }

  CHECK(double_actor_bound_term(0.0, 0.99, coarse) == 0.0);
  CHECK(double_actor_bound_term(0.5, 0.9, coarse) ==
        doctest::Approx(0.5 * (2 * coarse.critic_deviance_error + coarse.policy_execution_error) / 0.1));
  CHECK_THROWS_AS(error_triple(make_agent(Algorithm::TD3, 7), b), Unsupported);
}
