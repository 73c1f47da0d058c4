#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dactor/neural.hpp"
#include "dactor/properties.hpp"
#include "dactor/rng.hpp"

using namespace dactor;

TEST_CASE("single linear layer forward and backward") {
  Mlp net({1, 1});
  net.weight(0, 0, 0) = 2.0;
  net.bias(0, 0) = 1.0;
  const std::vector<double> x{3.0};
  CHECK(mlp_forward(net, x) == std::vector<double>{7.0});
  const std::vector<double> up{1.0};
  const GradientSet g = mlp_backward(net, x, up);
  CHECK(g.weight(0, 0, 0) == 3.0);
  CHECK(g.bias(0, 0) == 1.0);
  CHECK(g.input()[0] == 2.0);
}

TEST_CASE("forward matches a hand-written ReLU network") {
  Rng rng(4);
  const Mlp net = Mlp::uniform_init({3, 5, 2}, OutputActivation::scaled_tanh(1.5), rng);
  const std::vector<double> x{0.3, -1.2, 2.0};
  std::vector<double> h(5);
  for (std::size_t r = 0; r < 5; ++r) {
    double s = net.bias(0, r);
    for (std::size_t c = 0; c < 3; ++c) s += net.weight(0, r, c) * x[c];
    h[r] = std::max(0.0, s);
  }
  const std::vector<double> y = net.forward(x);
  for (std::size_t r = 0; r < 2; ++r) {
    double s = net.bias(1, r);
    for (std::size_t c = 0; c < 5; ++c) s += net.weight(1, r, c) * h[c];
    CHECK(y[r] == doctest::Approx(1.5 * std::tanh(s)).epsilon(1e-14));
  }
}

TEST_CASE("shape and construction errors") {
  CHECK_THROWS_AS(Mlp({3}), std::invalid_argument);
  CHECK_THROWS_AS(Mlp({3, 0, 1}), std::invalid_argument);
  const Mlp net({2, 1});
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(OutputActivation::scaled_tanh(0.0), std::invalid_argument);
}

TEST_CASE("backward accumulates into an existing gradient set") {
  Rng rng(5);
  const Mlp net = Mlp::uniform_init({2, 4, 1}, OutputActivation::identity(), rng);
  const std::vector<double> x{0.5, -0.25};
  const std::vector<double> up{1.0};
  const GradientSet once = mlp_backward(net, x, up);
  GradientSet twice(net);
  ForwardTrace trace;
  for (int i = 0; i < 2; ++i) {
    net.forward(x, trace);
    net.backward(trace, up, twice);
  }
  for (std::size_t p = 0; p < once.parameters().size(); ++p) {
    CHECK(twice.parameters()[p] == 2.0 * once.parameters()[p]);
  }
}

TEST_CASE("batched passes agree with per-sample passes") {
  Rng rng(9);
  const Mlp net = Mlp::uniform_init({3, 6, 5, 2}, OutputActivation::scaled_tanh(2.0), rng);
  const std::size_t rows = 7;
  std::vector<double> x(rows * 3), up(rows * 2);
  for (double& v : x) v = rng.uniform(-2.0, 2.0);
  for (double& v : up) v = rng.uniform(-1.0, 1.0);
  x[4] = 0.0;

  BatchTrace trace;
  net.forward_batch(x, rows, trace);
  GradientSet grads(net);
  std::vector<double> input_grads(rows * 3);
  net.backward_batch(trace, up, &grads, input_grads);

  GradientSet sum(net);
  for (std::size_t b = 0; b < rows; ++b) {
    const std::span<const double> xb(x.data() + 3 * b, 3);
    const std::span<const double> ub(up.data() + 2 * b, 2);
    const std::vector<double> y = mlp_forward(net, xb);
    CHECK(y[0] == trace.output()[2 * b]);
    CHECK(y[1] == trace.output()[2 * b + 1]);
    const GradientSet g = mlp_backward(net, xb, ub);
    for (std::size_t i = 0; i < 3; ++i) CHECK(g.input()[i] == input_grads[3 * b + i]);
    for (std::size_t p = 0; p < g.parameters().size(); ++p) sum.parameters()[p] += g.parameters()[p];
  }
  for (std::size_t p = 0; p < sum.parameters().size(); ++p) {
    CHECK(grads.parameters()[p] == doctest::Approx(sum.parameters()[p]).epsilon(1e-12));
  }
}

TEST_CASE("gradients agree with central finite differences") {
  const SuiteResult r = check_gradients(10, 99);
  CAPTURE(r.worst);
  CHECK(r.cases > 0);
  CHECK(r.passed == r.cases);
}

TEST_CASE("first Adam step moves by about the learning rate") {
  Mlp net({1, 1});
  AdamState opt(net);
  GradientSet g(net);
  g.parameters()[0] = 1.0;
  g.parameters()[1] = 1.0;
  adam_step(net, g, opt, 1e-3);
  CHECK(net.weight(0, 0, 0) == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(std::abs(net.weight(0, 0, 0) + 1e-3) < 1e-6);
  CHECK(opt.step_count == 1);
}

TEST_CASE("zero gradients leave parameters unchanged") {
  Rng rng(6);
  Mlp net = Mlp::uniform_init({3, 4, 2}, OutputActivation::identity(), rng);
  const Mlp before = net;
  AdamState opt(net);
  GradientSet g(net);
  adam_step(net, g, opt, 1e-3);
  CHECK(net == before);
}

TEST_CASE("non-finite gradients are rejected without mutation") {
  Rng rng(7);
  Mlp net = Mlp::uniform_init({2, 3, 1}, OutputActivation::identity(), rng);
  const Mlp before = net;
  AdamState opt(net);
  GradientSet g(net);
  g.parameters()[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(net, g, opt, 1e-3), NumericalError);
  CHECK(net == before);
  CHECK(opt.step_count == 0);
  for (double m : opt.first_moment) CHECK(m == 0.0);
}

TEST_CASE("soft update") {
  Mlp target({1, 1});
  Mlp online({1, 1});
  online.weight(0, 0, 0) = 1.0;
  online.bias(0, 0) = 1.0;
  soft_update(target, online, 0.005);
  CHECK(target.weight(0, 0, 0) == doctest::Approx(0.005).epsilon(1e-15));

  Rng rng(8);
  Mlp a = Mlp::uniform_init({2, 3, 1}, OutputActivation::identity(), rng);
  const Mlp b = Mlp::uniform_init({2, 3, 1}, OutputActivation::identity(), rng);
  const Mlp a0 = a;
  soft_update(a, b, 0.0);
  CHECK(a == a0);
  soft_update(a, b, 1.0);
  CHECK(a == b);

  CHECK_THROWS_AS(soft_update(a, b, 1.5), std::invalid_argument);
  Mlp other({2, 4, 1});
  CHECK_THROWS_AS(soft_update(other, b, 0.5), std::invalid_argument);
}
