#include "pbtme/rl/replay_buffer.hpp"

#include <algorithm>
#include <random>

#include "pbtme/errors.hpp"

namespace pbtme::rl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim, int action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
    states_.resize(capacity * state_dim);
    next_states_.resize(capacity * state_dim);
    actions_.resize(capacity * action_dim);
    rewards_.resize(capacity);
    dones_.resize(capacity);
}

void ReplayBuffer::add(std::span<const float> state, std::span<const float> action, float reward,
                       std::span<const float> next_state, bool done) {
    if (state.size() != std::size_t(state_dim_) || next_state.size() != std::size_t(state_dim_) ||
        action.size() != std::size_t(action_dim_))
        throw ContractViolation("transition dimensions do not match the replay buffer");
    std::copy(state.begin(), state.end(), states_.begin() + cursor_ * state_dim_);
    std::copy(next_state.begin(), next_state.end(), next_states_.begin() + cursor_ * state_dim_);
    std::copy(action.begin(), action.end(), actions_.begin() + cursor_ * action_dim_);
    rewards_[cursor_] = reward;
    dones_[cursor_] = done ? 1.f : 0.f;
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
}

std::size_t ReplayBuffer::slot_of(std::size_t i) const {
    const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
    return (oldest + i) % capacity_;
}

Transition ReplayBuffer::at(std::size_t i) const {
    if (i >= size_) throw ContractViolation("replay buffer index out of range");
    const std::size_t s = slot_of(i);
    Transition t;
    t.state.assign(states_.begin() + s * state_dim_, states_.begin() + (s + 1) * state_dim_);
    t.next_state.assign(next_states_.begin() + s * state_dim_, next_states_.begin() + (s + 1) * state_dim_);
    t.action.assign(actions_.begin() + s * action_dim_, actions_.begin() + (s + 1) * action_dim_);
    t.reward = rewards_[s];
    t.done = dones_[s] != 0.f;
    return t;
}

void ReplayBuffer::write_row(std::size_t s, std::size_t col, Batch<float>& b) const {
    for (int k = 0; k < state_dim_; ++k) {
        b.state(k, col) = states_[s * state_dim_ + k];
        b.next_state(k, col) = next_states_[s * state_dim_ + k];
    }
    for (int k = 0; k < action_dim_; ++k) b.action(k, col) = actions_[s * action_dim_ + k];
    b.reward(0, col) = rewards_[s];
    b.done(0, col) = dones_[s];
}

Batch<float> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
    if (size_ == 0) throw ContractViolation("cannot sample from an empty replay buffer");
    Batch<float> b{nn::Matrix<float>(state_dim_, batch_size), nn::Matrix<float>(action_dim_, batch_size),
                   nn::Matrix<float>(1, batch_size), nn::Matrix<float>(state_dim_, batch_size),
                   nn::Matrix<float>(1, batch_size)};
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    for (std::size_t c = 0; c < batch_size; ++c) write_row(pick(rng), c, b);
    return b;
}

void ReplayBuffer::clear() {
    size_ = 0;
    cursor_ = 0;
}

} // namespace pbtme::rl
