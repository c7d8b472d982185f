#pragma once

#include <array>

#include "pbtme/env/environment.hpp"

namespace pbtme::env {

struct Rect {
    double x_low, x_high, y_low, y_high;
};

/// Point mass in a walled arena facing a U-shaped trap.
///
/// State (x, y, vx, vy); the action is an acceleration. Velocity is capped in norm,
/// moves are resolved one axis at a time and a blocked axis loses its velocity
/// component. The per-step reward is the realized x-displacement minus a small
/// action cost, so heading straight for +x ends in the pocket of the trap.
class PointMazeTrap final : public Environment {
public:
    static constexpr double arena_half_width = 5.0;
    static constexpr double max_speed = 0.5;
    static constexpr double accel_scale = 0.1;
    static constexpr double action_cost = 0.01;
    static constexpr int horizon = 100;

    PointMazeTrap();

    State reset(Rng& rng) const override;
    std::vector<float> observe(const State& s) const override;
    std::vector<double> final_state_descriptor(const State& s) const override;

    /// Back wall of the trap plus its two arms.
    static const std::array<Rect, 3>& walls();

protected:
    StepResult transition(const State& s, std::span<const double> action) const override;
};

} // namespace pbtme::env
