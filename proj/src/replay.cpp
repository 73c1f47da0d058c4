#include "dactor/replay.hpp"

#include <algorithm>
#include <string>

namespace dactor {

Batch::Batch(std::size_t n, std::size_t sd, std::size_t ad)
    : size(n),
      state_dim(sd),
      action_dim(ad),
      states(n * sd),
      actions(n * ad),
      rewards(n),
      next_states(n * sd),
      dones(n) {}

Transition Batch::transition(std::size_t i) const {
  const auto s = state(i), a = action(i), ns = next_state(i);
  return {{s.begin(), s.end()}, {a.begin(), a.end()}, rewards[i], {ns.begin(), ns.end()},
          dones[i] != 0.0};
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  if (state_dim == 0 || action_dim == 0) {
    throw std::invalid_argument("replay buffer dimensions must be positive");
  }
  states_.reserve(std::min<std::size_t>(capacity, 1u << 16) * state_dim);
}

void ReplayBuffer::push(const Transition& t) {
  push(t.state, t.action, t.reward, t.next_state, t.done);
}

void ReplayBuffer::push(std::span<const double> state, std::span<const double> action,
                        double reward, std::span<const double> next_state, bool done) {
  if (state.size() != state_dim_ || next_state.size() != state_dim_ ||
      action.size() != action_dim_) {
    throw std::invalid_argument("replay push: transition dimensions (" +
                                std::to_string(state.size()) + ", " +
                                std::to_string(action.size()) + ") do not match buffer (" +
                                std::to_string(state_dim_) + ", " + std::to_string(action_dim_) +
                                ")");
  }
  if (size_ < capacity_) {
    // Storage grows lazily until the ring is full; cursor_ == size_ in this phase.
    states_.insert(states_.end(), state.begin(), state.end());
    actions_.insert(actions_.end(), action.begin(), action.end());
    rewards_.push_back(reward);
    next_states_.insert(next_states_.end(), next_state.begin(), next_state.end());
    dones_.push_back(done ? 1 : 0);
    ++size_;
  } else {
    std::copy(state.begin(), state.end(), states_.begin() + cursor_ * state_dim_);
    std::copy(action.begin(), action.end(), actions_.begin() + cursor_ * action_dim_);
    rewards_[cursor_] = reward;
    std::copy(next_state.begin(), next_state.end(), next_states_.begin() + cursor_ * state_dim_);
    dones_[cursor_] = done ? 1 : 0;
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  Batch out;
  sample_into(out, n, rng);
  return out;
}

void ReplayBuffer::sample_into(Batch& out, std::size_t n, Rng& rng) const {
  if (size_ == 0) throw NotReady("replay buffer is empty");
  if (n == 0) throw std::invalid_argument("sample size must be positive");
  if (out.size != n || out.state_dim != state_dim_ || out.action_dim != action_dim_) {
    out = Batch(n, state_dim_, action_dim_);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(size_));
    std::copy_n(states_.begin() + j * state_dim_, state_dim_, out.states.begin() + i * state_dim_);
    std::copy_n(actions_.begin() + j * action_dim_, action_dim_,
                out.actions.begin() + i * action_dim_);
    out.rewards[i] = rewards_[j];
    std::copy_n(next_states_.begin() + j * state_dim_, state_dim_,
                out.next_states.begin() + i * state_dim_);
    out.dones[i] = dones_[j] ? 1.0 : 0.0;
  }
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay index out of range");
  return {{states_.begin() + i * state_dim_, states_.begin() + (i + 1) * state_dim_},
          {actions_.begin() + i * action_dim_, actions_.begin() + (i + 1) * action_dim_},
          rewards_[i],
          {next_states_.begin() + i * state_dim_, next_states_.begin() + (i + 1) * state_dim_},
          dones_[i] != 0};
}

}  // namespace dactor
