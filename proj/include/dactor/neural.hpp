#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dactor/rng.hpp"

namespace dactor {

/// Raised when a non-finite value would otherwise be written into parameters or targets.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputActivation {
  enum class Kind : std::uint8_t { Identity, ScaledTanh };

  Kind kind = Kind::Identity;
  double bound = 1.0;

  static OutputActivation identity() { return {}; }
  static OutputActivation scaled_tanh(double bound);

  bool operator==(const OutputActivation&) const = default;
};

/// Flat storage layout shared by a network and its gradients: for each layer k the
/// weight block followed by the bias block. The weight block is input-major: entry
/// (row r, col c) of the sizes[k+1] x sizes[k] matrix sits at c * sizes[k+1] + r.
struct ParameterLayout {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> weight_offset;
  std::vector<std::size_t> bias_offset;
  std::size_t total = 0;

  explicit ParameterLayout(std::vector<std::size_t> layer_sizes);
  std::size_t num_layers() const { return sizes.size() - 1; }
  bool operator==(const ParameterLayout&) const = default;
};

/// Allocator whose value-less construct() leaves doubles uninitialized, so scratch
/// vectors can grow without zero-filling.
template <class T>
struct DefaultInitAllocator : std::allocator<T> {
  template <class U>
  struct rebind {
    using other = DefaultInitAllocator<U>;
  };
  DefaultInitAllocator() = default;
  template <class U>
  DefaultInitAllocator(const DefaultInitAllocator<U>&) noexcept {}
  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

using ScratchVector = std::vector<double, DefaultInitAllocator<double>>;

/// Row-major buffers for a forward pass over `rows` inputs at once. Reusing one trace
/// across calls avoids reallocating.
struct BatchTrace {
  std::size_t rows = 0;
  std::vector<ScratchVector> activations;  // [0] = input, [k + 1] = output of layer k
  ScratchVector output_pre_activation;
  ScratchVector delta;
  ScratchVector delta_prev;
  ScratchVector weights_t;

  std::span<const double> output() const { return activations.back(); }
};

/// A single-input evaluation is a batch of one.
using ForwardTrace = BatchTrace;

class GradientSet;

/// Dense ReLU network with an optional scaled-tanh output squashing.
class Mlp {
 public:
  /// All parameters zero.
  explicit Mlp(std::vector<std::size_t> layer_sizes,
               OutputActivation output = OutputActivation::identity());

  /// Weights and biases of each layer uniform in +-1/sqrt(fan_in).
  static Mlp uniform_init(std::vector<std::size_t> layer_sizes, OutputActivation output, Rng& rng);

  const std::vector<std::size_t>& layer_sizes() const { return layout_.sizes; }
  const ParameterLayout& layout() const { return layout_; }
  std::size_t num_layers() const { return layout_.num_layers(); }
  std::size_t input_dim() const { return layout_.sizes.front(); }
  std::size_t output_dim() const { return layout_.sizes.back(); }
  const OutputActivation& output_activation() const { return output_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> biases(std::size_t layer);
  std::span<const double> biases(std::size_t layer) const;
  double& weight(std::size_t layer, std::size_t row, std::size_t col);
  double weight(std::size_t layer, std::size_t row, std::size_t col) const;
  double& bias(std::size_t layer, std::size_t row);
  double bias(std::size_t layer, std::size_t row) const;

  std::vector<double> forward(std::span<const double> input) const;
  void forward(std::span<const double> input, ForwardTrace& trace) const;

  /// Convenience for single-output networks.
  double forward_scalar(std::span<const double> input, ForwardTrace& trace) const;

  /// Adds the gradients of (upstream . output) for the input held in `trace` (which
  /// must come from forward() on this network) to `grads`. With
  /// `parameter_gradients == false` only the input gradient is produced.
  void backward(ForwardTrace& trace, std::span<const double> upstream, GradientSet& grads,
                bool parameter_gradients = true) const;

  /// `inputs` holds `rows` inputs back to back. Row b of the result equals forward() on
  /// input b bitwise.
  void forward_batch(std::span<const double> inputs, std::size_t rows, BatchTrace& trace) const;

  /// Batched backward(): parameter gradients of sum_b (upstream[b] . output[b]) are added to
  /// `grads` (skipped when null); `input_grads`, if non-empty, receives the per-row input
  /// gradients (rows x input_dim, overwritten).
  void backward_batch(BatchTrace& trace, std::span<const double> upstream, GradientSet* grads,
                      std::span<double> input_grads) const;

  bool same_architecture(const Mlp& other) const {
    return layout_ == other.layout_ && output_ == other.output_;
  }

  bool operator==(const Mlp&) const = default;

 private:
  ParameterLayout layout_;
  OutputActivation output_;
  std::vector<double> params_;
};

class GradientSet {
 public:
  explicit GradientSet(const Mlp& net);

  const ParameterLayout& layout() const { return layout_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> input() { return input_; }
  std::span<const double> input() const { return input_; }

  std::span<const double> weights(std::size_t layer) const;
  std::span<const double> biases(std::size_t layer) const;
  double weight(std::size_t layer, std::size_t row, std::size_t col) const;
  double bias(std::size_t layer, std::size_t row) const;

  void zero();
  void scale(double factor);
  bool all_finite() const;

 private:
  friend class Mlp;
  ParameterLayout layout_;
  std::vector<double> params_;
  std::vector<double> input_;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(const Mlp& net);
};

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input);

/// Exact reverse-mode gradients of (upstream . net(input)) w.r.t. parameters and input.
GradientSet mlp_backward(const Mlp& net, std::span<const double> input,
                         std::span<const double> upstream);

/// One bias-corrected Adam step (minimization). Throws NumericalError on non-finite
/// gradients, leaving net and state untouched.
void adam_step(Mlp& net, const GradientSet& grads, AdamState& state, double learning_rate);

/// target <- tau * online + (1 - tau) * target, parameterwise.
void soft_update(Mlp& target, const Mlp& online, double tau);

}  // namespace dactor
