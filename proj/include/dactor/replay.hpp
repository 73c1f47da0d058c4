#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "dactor/rng.hpp"

namespace dactor {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;

  bool operator==(const Transition&) const = default;
};

/// Structure-of-arrays minibatch; row i of each block belongs to transition i.
struct Batch {
  std::size_t size = 0;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> states;
  std::vector<double> actions;
  std::vector<double> rewards;
  std::vector<double> next_states;
  std::vector<double> dones;  // 0.0 or 1.0

  Batch() = default;
  Batch(std::size_t n, std::size_t state_dim, std::size_t action_dim);

  std::span<const double> state(std::size_t i) const {
    return {states.data() + i * state_dim, state_dim};
  }
  std::span<const double> action(std::size_t i) const {
    return {actions.data() + i * action_dim, action_dim};
  }
  std::span<const double> next_state(std::size_t i) const {
    return {next_states.data() + i * state_dim, state_dim};
  }
  Transition transition(std::size_t i) const;
};

/// Raised by sample() on an empty buffer.
class NotReady : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-capacity ring of transitions; once full the oldest entry is overwritten.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim);

  void push(const Transition& t);
  void push(std::span<const double> state, std::span<const double> action, double reward,
            std::span<const double> next_state, bool done);

  /// n independent uniform draws with replacement.
  Batch sample(std::size_t n, Rng& rng) const;
  void sample_into(Batch& out, std::size_t n, Rng& rng) const;

  /// i-th stored entry in storage order (0 <= i < size()).
  Transition at(std::size_t i) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t write_cursor() const { return cursor_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  bool empty() const { return size_ == 0; }

 private:
  std::size_t capacity_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::vector<double> states_;
  std::vector<double> actions_;
  std::vector<double> rewards_;
  std::vector<double> next_states_;
  std::vector<unsigned char> dones_;
};

}  // namespace dactor
