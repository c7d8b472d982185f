#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pbtme/nn/mlp.hpp"
#include "pbtme/rng.hpp"

namespace pbtme::rl {

struct Transition {
    std::vector<float> state;
    std::vector<float> action;
    float reward = 0.f;
    std::vector<float> next_state;
    bool done = false;

    bool operator==(const Transition&) const = default;
};

/// Column-per-sample minibatch.
template <class S>
struct Batch {
    nn::Matrix<S> state;       // state_dim x B
    nn::Matrix<S> action;      // action_dim x B
    nn::Matrix<S> reward;      // 1 x B
    nn::Matrix<S> next_state;  // state_dim x B
    nn::Matrix<S> done;        // 1 x B, 1 for terminal transitions

    std::size_t size() const { return std::size_t(reward.cols()); }

    template <class T>
    Batch<T> cast() const {
        return {state.template cast<T>(), action.template cast<T>(), reward.template cast<T>(),
                next_state.template cast<T>(), done.template cast<T>()};
    }
};

/// Fixed-capacity ring of transitions; once full, each append overwrites the oldest.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, int state_dim, int action_dim);

    void add(std::span<const float> state, std::span<const float> action, float reward,
             std::span<const float> next_state, bool done);
    void add(const Transition& t) { add(t.state, t.action, t.reward, t.next_state, t.done); }

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    int state_dim() const { return state_dim_; }
    int action_dim() const { return action_dim_; }

    /// i-th stored transition, oldest first.
    Transition at(std::size_t i) const;

    /// Uniform sample with replacement over filled slots.
    Batch<float> sample(std::size_t batch_size, Rng& rng) const;

    void clear();

private:
    std::size_t slot_of(std::size_t i) const;
    void write_row(std::size_t slot, std::size_t col, Batch<float>& b) const;

    std::size_t capacity_;
    int state_dim_;
    int action_dim_;
    std::size_t size_ = 0;
    std::size_t cursor_ = 0;
    std::vector<float> states_, actions_, rewards_, next_states_, dones_;
};

} // namespace pbtme::rl
