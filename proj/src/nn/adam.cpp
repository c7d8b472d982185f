#include "pbtme/nn/adam.hpp"

#include <cmath>

namespace pbtme::nn {

bool adam_update(AdamState& state, std::span<float> params, std::span<const float> grads, float lr) {
    if (params.size() != grads.size() || params.size() != state.size())
        throw ContractViolation("adam: parameter, gradient and moment lengths differ");
    for (float g : grads)
        if (!std::isfinite(g)) return false;

    ++state.step_count;
    const double t = double(state.step_count);
    const float c1 = float(1.0 - std::pow(double(AdamState::beta1), t));
    const float c2 = float(1.0 - std::pow(double(AdamState::beta2), t));
    const float b1 = AdamState::beta1, b2 = AdamState::beta2;
    float* m = state.first_moment.data();
    float* v = state.second_moment.data();
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = b1 * m[i] + (1.f - b1) * grads[i];
        v[i] = b2 * v[i] + (1.f - b2) * grads[i] * grads[i];
        const float mhat = m[i] / c1;
        const float vhat = v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + AdamState::epsilon);
    }
    return true;
}

AdamResult adam_step(const AdamState& state, const FlatParams& params, const FlatParams& grads, float lr) {
    AdamResult r{state, params, true};
    r.applied = adam_update(r.state, r.params, grads, lr);
    return r;
}

} // namespace pbtme::nn
