#include "dactor/properties.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <vector>

#include "dactor/agents.hpp"
#include "dactor/neural.hpp"
#include "dactor/replay.hpp"
#include "dactor/rng.hpp"

namespace dactor {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform_index(hi - lo + 1));
}

std::vector<double> draw(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

std::vector<std::size_t> random_sizes(Rng& rng, std::size_t in, std::size_t out,
                                      std::size_t max_hidden_layers, std::size_t max_width) {
  std::vector<std::size_t> sizes{in};
  const std::size_t hidden = pick(rng, 0, max_hidden_layers);
  for (std::size_t k = 0; k < hidden; ++k) sizes.push_back(pick(rng, 1, max_width));
  sizes.push_back(out);
  return sizes;
}

/// A random problem instance shared by the estimator suites.
struct Instance {
  std::vector<Mlp> critics;
  std::vector<Mlp> actors;
  std::vector<double> state;
  double bound = 1.0;
};

Instance random_instance(Rng& rng) {
  const std::size_t sd = pick(rng, 1, 4);
  const std::size_t ad = pick(rng, 1, 3);
  Instance inst;
  inst.bound = rng.uniform(0.2, 3.0);
  const auto critic_sizes = random_sizes(rng, sd + ad, 1, 2, 32);
  const auto actor_sizes = random_sizes(rng, sd, ad, 2, 32);
  for (int i = 0; i < 2; ++i) {
    inst.critics.push_back(Mlp::uniform_init(critic_sizes, OutputActivation::identity(), rng));
  }
  for (int i = 0; i < 2; ++i) {
    inst.actors.push_back(
        Mlp::uniform_init(actor_sizes, OutputActivation::scaled_tanh(inst.bound), rng));
  }
  inst.state = draw(rng, sd, 3.0);
  return inst;
}

std::vector<double> smoothed(const Mlp& actor, std::span<const double> s, double bound, Rng& rng) {
  const std::vector<double> a = actor.forward(s);
  std::vector<double> noise(a.size());
  for (double& n : noise) n = rng.normal(0.0, 0.2 * bound);
  return smooth_action(a, noise, 0.5 * bound, bound);
}

}  // namespace

SuiteResult check_daddpg_below_ddpg(std::size_t cases, std::uint64_t seed) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "daddpg target <= ddpg target";
  Rng rng = Rng::stream(seed, "daddpg_vs_ddpg");
  for (std::size_t c = 0; c < cases; ++c) {
    const Instance inst = random_instance(rng);
    const double ddpg = target_ddpg(inst.critics[0], inst.actors[0], inst.state);
    const double daddpg = target_daddpg(inst.critics[0], inst.actors, inst.state);
    ++r.cases;
    if (daddpg <= ddpg) {
      ++r.passed;
    } else {
      r.worst = std::max(r.worst, daddpg - ddpg);
    }
  }
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult check_datd3_above_td3(std::size_t cases, std::uint64_t seed) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "datd3 target >= td3 target";
  Rng rng = Rng::stream(seed, "datd3_vs_td3");
  for (std::size_t c = 0; c < cases; ++c) {
    const Instance inst = random_instance(rng);
    const std::vector<double> a1 = smoothed(inst.actors[0], inst.state, inst.bound, rng);
    const std::vector<double> a2 = smoothed(inst.actors[1], inst.state, inst.bound, rng);
    const double td3 = std::min(critic_value(inst.critics[0], inst.state, a1),
                                critic_value(inst.critics[1], inst.state, a1));
    const double datd3 = target_datd3(inst.critics, inst.state, a1, a2);
    ++r.cases;
    if (datd3 >= td3) {
      ++r.passed;
    } else {
      r.worst = std::max(r.worst, td3 - datd3);
    }
  }
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult check_soft_target(std::size_t cases, std::uint64_t seed) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "soft target endpoint and monotonicity";
  Rng rng = Rng::stream(seed, "soft_target");
  constexpr std::array<double, 4> nus{0.0, 0.25, 0.5, 0.75};
  for (std::size_t c = 0; c < cases; ++c) {
    const Instance inst = random_instance(rng);
    const std::vector<double> a1 = smoothed(inst.actors[0], inst.state, inst.bound, rng);
    const std::vector<double> a2 = smoothed(inst.actors[1], inst.state, inst.bound, rng);
    const double datd3 = target_datd3(inst.critics, inst.state, a1, a2);
    bool ok = soft_target(inst.critics, inst.state, a1, a2, 0.0) == datd3;
    double prev = datd3;
    for (double nu : nus) {
      const double v = soft_target(inst.critics, inst.state, a1, a2, nu);
      if (v > prev) {
        ok = false;
        r.worst = std::max(r.worst, v - prev);
      }
      prev = v;
    }
    ++r.cases;
    if (ok) ++r.passed;
  }
  r.seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

/// Sign pattern of every hidden ReLU for one forward pass.
void relu_pattern(const Mlp& net, std::span<const double> input, ForwardTrace& trace,
                  std::vector<bool>& out) {
  net.forward(input, trace);
  out.clear();
  for (std::size_t k = 1; k + 1 < trace.activations.size(); ++k) {
    for (double a : trace.activations[k]) out.push_back(a > 0.0);
  }
}

struct GradientTally {
  std::size_t entries = 0;
  std::size_t passed = 0;
  double worst = 0.0;
  double h = 1e-5;
  double rel_tol = 1e-4;
  double abs_floor = 1e-8;

  void record(double analytic, double numeric) {
    const double err = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    ++entries;
    if (err <= std::max(rel_tol * scale, abs_floor)) ++passed;
    if (err > abs_floor) worst = std::max(worst, err / std::max(scale, abs_floor));
  }
};

/// f(net, input) = upstream . net(input). Returns false when a probe crossed a kink.
bool probe_network(Mlp net, std::span<const double> input, std::span<const double> upstream,
                   GradientTally& tally) {
  const GradientSet g = mlp_backward(net, input, upstream);
  ForwardTrace tp, tm;
  std::vector<bool> pp, pm;
  auto value = [&](const ForwardTrace& t) {
    double s = 0.0;
    const auto out = t.output();
    for (std::size_t i = 0; i < out.size(); ++i) s += upstream[i] * out[i];
    return s;
  };
  std::vector<double> numeric(g.parameters().size());
  auto params = net.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = params[p];
    params[p] = saved + tally.h;
    relu_pattern(net, input, tp, pp);
    params[p] = saved - tally.h;
    relu_pattern(net, input, tm, pm);
    params[p] = saved;
    if (pp != pm) return false;
    numeric[p] = (value(tp) - value(tm)) / (2.0 * tally.h);
  }
  std::vector<double> x(input.begin(), input.end());
  std::vector<double> numeric_input(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + tally.h;
    relu_pattern(net, x, tp, pp);
    x[i] = saved - tally.h;
    relu_pattern(net, x, tm, pm);
    x[i] = saved;
    if (pp != pm) return false;
    numeric_input[i] = (value(tp) - value(tm)) / (2.0 * tally.h);
  }
  for (std::size_t p = 0; p < numeric.size(); ++p) tally.record(g.parameters()[p], numeric[p]);
  for (std::size_t i = 0; i < numeric_input.size(); ++i) tally.record(g.input()[i], numeric_input[i]);
  return true;
}

void batch_pattern(const Mlp& critic, const Batch& batch, ForwardTrace& trace,
                   std::vector<bool>& out) {
  out.clear();
  std::vector<double> input;
  std::vector<bool> row;
  for (std::size_t i = 0; i < batch.size; ++i) {
    input.assign(batch.state(i).begin(), batch.state(i).end());
    input.insert(input.end(), batch.action(i).begin(), batch.action(i).end());
    relu_pattern(critic, input, trace, row);
    out.insert(out.end(), row.begin(), row.end());
  }
}

bool probe_critic_loss(Mlp critic, const Mlp& other, const Batch& batch,
                       std::span<const double> targets, double lambda, GradientTally& tally) {
  const CriticLoss analytic = critic_loss(critic, batch, targets, &other, lambda);
  ForwardTrace trace;
  std::vector<bool> pp, pm;
  std::vector<double> numeric(critic.parameters().size());
  auto params = critic.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = params[p];
    params[p] = saved + tally.h;
    batch_pattern(critic, batch, trace, pp);
    const double up = critic_loss(critic, batch, targets, &other, lambda).loss;
    params[p] = saved - tally.h;
    batch_pattern(critic, batch, trace, pm);
    const double down = critic_loss(critic, batch, targets, &other, lambda).loss;
    params[p] = saved;
    if (pp != pm) return false;
    numeric[p] = (up - down) / (2.0 * tally.h);
  }
  for (std::size_t p = 0; p < numeric.size(); ++p) tally.record(analytic.grads.parameters()[p], numeric[p]);
  return true;
}

}  // namespace

SuiteResult check_gradients(std::size_t networks, std::uint64_t seed, double h, double rel_tol,
                            double abs_floor) {
  const auto t0 = Clock::now();
  SuiteResult r;
  r.name = "finite-difference gradient oracle";
  Rng rng = Rng::stream(seed, "gradient_oracle");
  GradientTally tally;
  tally.h = h;
  tally.rel_tol = rel_tol;
  tally.abs_floor = abs_floor;
  std::size_t redraws = 0;
  constexpr int kMaxAttempts = 100;

  for (std::size_t n = 0; n < networks; ++n) {
    // Generic network: up to three layers, up to 32 units each.
    const std::size_t in = pick(rng, 1, 6);
    const std::size_t out = pick(rng, 1, 4);
    const auto sizes = random_sizes(rng, in, out, 2, 32);
    const OutputActivation act = rng.uniform() < 0.5 ? OutputActivation::identity()
                                                     : OutputActivation::scaled_tanh(rng.uniform(0.5, 2.0));
    const Mlp net = Mlp::uniform_init(sizes, act, rng);
    bool done = false;
    for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
      const std::vector<double> x = draw(rng, in, 2.0);
      const std::vector<double> u = draw(rng, out, 1.0);
      done = probe_network(net, x, u, tally);
      if (!done) ++redraws;
    }

    // Critic with the deviance penalty against a second critic.
    const std::size_t sd = pick(rng, 1, 4);
    const std::size_t ad = pick(rng, 1, 3);
    const auto critic_sizes = random_sizes(rng, sd + ad, 1, 2, 32);
    const Mlp critic = Mlp::uniform_init(critic_sizes, OutputActivation::identity(), rng);
    const Mlp other = Mlp::uniform_init(critic_sizes, OutputActivation::identity(), rng);
    const double lambda = rng.uniform(0.0, 0.5);
    done = false;
    for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
      Batch batch(4, sd, ad);
      batch.states = draw(rng, 4 * sd, 2.0);
      batch.actions = draw(rng, 4 * ad, 1.0);
      batch.next_states = draw(rng, 4 * sd, 2.0);
      const std::vector<double> targets = draw(rng, 4, 3.0);
      done = probe_critic_loss(critic, other, batch, targets, lambda, tally);
      if (!done) ++redraws;
    }
  }
  r.cases = tally.entries;
  r.passed = tally.passed;
  r.worst = tally.worst;
  r.seconds = seconds_since(t0);
  r.note = std::to_string(networks) + " networks, " + std::to_string(redraws) + " kink redraws";
  return r;
}

}  // namespace dactor
