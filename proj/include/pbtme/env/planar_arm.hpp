#pragma once

#include <array>

#include "pbtme/env/environment.hpp"

namespace pbtme::env {

/// Eight-link planar arm of total length 1. Actions are joint-angle increments
/// (scaled by 0.1 rad); the reward penalizes spread between joint angles and the
/// descriptor is the end-effector position at the last step.
class PlanarArm final : public Environment {
public:
    static constexpr int num_links = 8;
    static constexpr double link_length = 1.0 / num_links;
    static constexpr double delta_scale = 0.1;
    static constexpr int horizon = 10;

    PlanarArm();

    State reset(Rng& rng) const override;
    std::vector<float> observe(const State& s) const override;
    std::vector<double> final_state_descriptor(const State& s) const override;

    /// Unnormalized end-effector position.
    static std::array<double, 2> end_effector(const State& angles);

protected:
    StepResult transition(const State& s, std::span<const double> action) const override;
};

} // namespace pbtme::env
