#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pbtme/nn/mlp.hpp"

namespace pbtme::nn {

struct AdamState {
    static constexpr float beta1 = 0.9f;
    static constexpr float beta2 = 0.999f;
    static constexpr float epsilon = 1e-8f;

    std::vector<float> first_moment;
    std::vector<float> second_moment;
    std::int64_t step_count = 0;

    explicit AdamState(std::size_t n = 0) : first_moment(n, 0.f), second_moment(n, 0.f) {}
    std::size_t size() const { return first_moment.size(); }
    bool operator==(const AdamState&) const = default;
};

/// Bias-corrected Adam update applied in place. Returns false (and leaves both
/// state and parameters untouched) when any gradient is non-finite.
bool adam_update(AdamState& state, std::span<float> params, std::span<const float> grads, float lr);

struct AdamResult {
    AdamState state;
    FlatParams params;
    bool applied = true;
};

/// Value-returning form of adam_update.
AdamResult adam_step(const AdamState& state, const FlatParams& params, const FlatParams& grads, float lr);

} // namespace pbtme::nn
