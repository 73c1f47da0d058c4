#include "dactor/neural.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dactor/kernels.hpp"

namespace dactor {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(want) +
                                ", got " + std::to_string(got));
  }
}

}  // namespace

OutputActivation OutputActivation::scaled_tanh(double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("scaled tanh bound must be positive");
  return {Kind::ScaledTanh, bound};
}

ParameterLayout::ParameterLayout(std::vector<std::size_t> layer_sizes)
    : sizes(std::move(layer_sizes)) {
  if (sizes.size() < 2) throw std::invalid_argument("network needs at least input and output sizes");
  for (std::size_t s : sizes) {
    if (s == 0) throw std::invalid_argument("layer sizes must be positive");
  }
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    weight_offset.push_back(total);
    total += sizes[k + 1] * sizes[k];
    bias_offset.push_back(total);
    total += sizes[k + 1];
  }
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<std::size_t> layer_sizes, OutputActivation output)
    : layout_(std::move(layer_sizes)), output_(output), params_(layout_.total, 0.0) {}

Mlp Mlp::uniform_init(std::vector<std::size_t> layer_sizes, OutputActivation output, Rng& rng) {
  Mlp net(std::move(layer_sizes), output);
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(net.layout_.sizes[k]));
    for (double& w : net.weights(k)) w = rng.uniform(-limit, limit);
    for (double& b : net.biases(k)) b = rng.uniform(-limit, limit);
  }
  return net;
}

std::span<double> Mlp::weights(std::size_t layer) {
  return std::span<double>(params_).subspan(layout_.weight_offset.at(layer),
                                            layout_.sizes[layer + 1] * layout_.sizes[layer]);
}
std::span<const double> Mlp::weights(std::size_t layer) const {
  return std::span<const double>(params_).subspan(layout_.weight_offset.at(layer),
                                                  layout_.sizes[layer + 1] * layout_.sizes[layer]);
}
std::span<double> Mlp::biases(std::size_t layer) {
  return std::span<double>(params_).subspan(layout_.bias_offset.at(layer), layout_.sizes[layer + 1]);
}
std::span<const double> Mlp::biases(std::size_t layer) const {
  return std::span<const double>(params_).subspan(layout_.bias_offset.at(layer),
                                                  layout_.sizes[layer + 1]);
}
double& Mlp::weight(std::size_t layer, std::size_t row, std::size_t col) {
  return weights(layer)[col * layout_.sizes[layer + 1] + row];
}
double Mlp::weight(std::size_t layer, std::size_t row, std::size_t col) const {
  return weights(layer)[col * layout_.sizes[layer + 1] + row];
}
double& Mlp::bias(std::size_t layer, std::size_t row) { return biases(layer)[row]; }
double Mlp::bias(std::size_t layer, std::size_t row) const { return biases(layer)[row]; }

std::vector<double> Mlp::forward(std::span<const double> input) const {
  ForwardTrace trace;
  forward(input, trace);
  const auto out = trace.output();
  return {out.begin(), out.end()};
}

void Mlp::forward(std::span<const double> input, ForwardTrace& trace) const {
  require_dim(input.size(), input_dim(), "mlp forward input");
  forward_batch(input, 1, trace);
}

double Mlp::forward_scalar(std::span<const double> input, ForwardTrace& trace) const {
  forward(input, trace);
  return trace.activations.back()[0];
}

void Mlp::backward(ForwardTrace& trace, std::span<const double> upstream, GradientSet& grads,
                   bool parameter_gradients) const {
  require_dim(upstream.size(), output_dim(), "mlp backward upstream");
  if (grads.layout_ != layout_) throw std::invalid_argument("gradient set does not match network");
  if (trace.rows != 1) throw std::invalid_argument("trace does not hold a single input");
  std::vector<double> input_grad(input_dim());
  backward_batch(trace, upstream, parameter_gradients ? &grads : nullptr, input_grad);
  for (std::size_t i = 0; i < input_grad.size(); ++i) grads.input_[i] += input_grad[i];
}

void Mlp::forward_batch(std::span<const double> inputs, std::size_t rows,
                        BatchTrace& trace) const {
  require_dim(inputs.size(), rows * input_dim(), "mlp batch input");
  const auto& k = kernels::active();
  const std::size_t layers = num_layers();
  trace.rows = rows;
  trace.activations.resize(layers + 1);
  trace.activations[0].assign(inputs.begin(), inputs.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t out_w = layout_.sizes[l + 1];
    const std::size_t in_w = layout_.sizes[l];
    auto& out = trace.activations[l + 1];
    out.resize(rows * out_w);
    k.combine_rows(params_.data() + layout_.weight_offset[l], params_.data() + layout_.bias_offset[l],
                   trace.activations[l].data(), out.data(), rows, in_w, out_w);
    if (l + 1 < layers) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    } else if (output_.kind == OutputActivation::Kind::ScaledTanh) {
      trace.output_pre_activation.assign(out.begin(), out.end());
      for (double& v : out) v = output_.bound * std::tanh(v);
    }
  }
}

void Mlp::backward_batch(BatchTrace& trace, std::span<const double> upstream, GradientSet* grads,
                         std::span<double> input_grads) const {
  const std::size_t n = trace.rows;
  require_dim(upstream.size(), n * output_dim(), "mlp batch upstream");
  if (grads != nullptr && grads->layout_ != layout_) {
    throw std::invalid_argument("gradient set does not match network");
  }
  if (!input_grads.empty()) require_dim(input_grads.size(), n * input_dim(), "mlp batch input grads");
  if (trace.activations.size() != num_layers() + 1 ||
      trace.activations[0].size() != n * input_dim()) {
    throw std::invalid_argument("trace does not come from this network");
  }
  const auto& k = kernels::active();
  const std::size_t layers = num_layers();

  auto& delta = trace.delta;
  auto& delta_prev = trace.delta_prev;
  delta.assign(upstream.begin(), upstream.end());
  if (output_.kind == OutputActivation::Kind::ScaledTanh) {
    for (std::size_t o = 0; o < delta.size(); ++o) {
      const double t = std::tanh(trace.output_pre_activation[o]);
      delta[o] *= output_.bound * (1.0 - t * t);
    }
  }

  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t rows = layout_.sizes[l + 1];
    const std::size_t cols = layout_.sizes[l];
    const ScratchVector& a_in = trace.activations[l];
    const double* w = params_.data() + layout_.weight_offset[l];
    if (grads != nullptr) {
      double* gw = grads->params_.data() + layout_.weight_offset[l];
      double* gb = grads->params_.data() + layout_.bias_offset[l];
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t r = 0; r < rows; ++r) gb[r] += delta[b * rows + r];
      }
      k.outer_acc(gw, a_in.data(), delta.data(), n, cols, rows);
    }
    if (l == 0 && input_grads.empty()) break;
    // Row-major copy of the weights for propagating deltas back to the inputs.
    auto& wt = trace.weights_t;
    wt.resize(rows * cols);
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t r = 0; r < rows; ++r) wt[r * cols + c] = w[c * rows + r];
    }
    delta_prev.resize(n * cols);
    k.combine_rows(wt.data(), nullptr, delta.data(), delta_prev.data(), n, rows, cols);
    if (l > 0) {
      for (std::size_t i = 0; i < delta_prev.size(); ++i) {
        if (!(a_in[i] > 0.0)) delta_prev[i] = 0.0;
      }
    }
    std::swap(delta, delta_prev);
  }
  if (!input_grads.empty()) std::copy(delta.begin(), delta.end(), input_grads.begin());
}

// ---------------------------------------------------------------------------
// GradientSet

GradientSet::GradientSet(const Mlp& net)
    : layout_(net.layout()), params_(layout_.total, 0.0), input_(net.input_dim(), 0.0) {}

std::span<const double> GradientSet::weights(std::size_t layer) const {
  return std::span<const double>(params_).subspan(layout_.weight_offset.at(layer),
                                                  layout_.sizes[layer + 1] * layout_.sizes[layer]);
}
std::span<const double> GradientSet::biases(std::size_t layer) const {
  return std::span<const double>(params_).subspan(layout_.bias_offset.at(layer),
                                                  layout_.sizes[layer + 1]);
}
double GradientSet::weight(std::size_t layer, std::size_t row, std::size_t col) const {
  return weights(layer)[col * layout_.sizes[layer + 1] + row];
}
double GradientSet::bias(std::size_t layer, std::size_t row) const { return biases(layer)[row]; }

void GradientSet::zero() {
  std::fill(params_.begin(), params_.end(), 0.0);
  std::fill(input_.begin(), input_.end(), 0.0);
}

void GradientSet::scale(double factor) {
  for (double& g : params_) g *= factor;
  for (double& g : input_) g *= factor;
}

bool GradientSet::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double g) { return std::isfinite(g); }) &&
         std::all_of(input_.begin(), input_.end(), [](double g) { return std::isfinite(g); });
}

// ---------------------------------------------------------------------------
// Free operations

AdamState::AdamState(const Mlp& net)
    : first_moment(net.parameters().size(), 0.0), second_moment(net.parameters().size(), 0.0) {}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input) {
  return net.forward(input);
}

GradientSet mlp_backward(const Mlp& net, std::span<const double> input,
                         std::span<const double> upstream) {
  require_dim(upstream.size(), net.output_dim(), "mlp backward upstream");
  ForwardTrace trace;
  net.forward(input, trace);
  GradientSet grads(net);
  net.backward(trace, upstream, grads);
  return grads;
}

void adam_step(Mlp& net, const GradientSet& grads, AdamState& state, double learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("adam learning rate must be positive");
  if (grads.layout() != net.layout() || state.first_moment.size() != net.parameters().size()) {
    throw std::invalid_argument("adam: shape mismatch between network, gradients and state");
  }
  const auto g = grads.parameters();
  if (!std::all_of(g.begin(), g.end(), [](double x) { return std::isfinite(x); })) {
    throw NumericalError("adam: non-finite gradient");
  }
  state.step_count += 1;
  const auto t = static_cast<double>(state.step_count);
  const kernels::AdamCoefficients c{learning_rate,
                                    state.beta1,
                                    state.beta2,
                                    state.epsilon,
                                    1.0 - std::pow(state.beta1, t),
                                    1.0 - std::pow(state.beta2, t)};
  auto p = net.parameters();
  kernels::active().adam(p.data(), g.data(), state.first_moment.data(), state.second_moment.data(),
                         p.size(), c);
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_architecture(online)) {
    throw std::invalid_argument("soft_update: target and online architectures differ");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau outside [0, 1]");
  auto t = target.parameters();
  const auto o = online.parameters();
  kernels::active().lerp(t.data(), o.data(), tau, t.size());
}

}  // namespace dactor
