#include "pbtme/env/point_maze.hpp"

#include <algorithm>
#include <cmath>

namespace pbtme::env {

namespace {

EnvSpec point_maze_spec() {
    EnvSpec s;
    s.name = "point-maze-trap";
    s.state_dim = 4;
    s.action_dim = 2;
    s.episode_length = PointMazeTrap::horizon;
    s.bd_dim = 2;
    s.bd_bounds = Box{{0.0, 0.0}, {1.0, 1.0}};
    // The return telescopes to x_T - x_0 minus the action cost, so it is bounded
    // below by -arena_half_width - 2 * action_cost * T = -7.
    s.min_return = -PointMazeTrap::arena_half_width - 2.0 * PointMazeTrap::action_cost * PointMazeTrap::horizon;
    s.fitness_offset = 51.0;
    return s;
}

/// Moves one coordinate from `from` by `delta`; `across` is the other coordinate.
/// Returns the resolved position and whether the move was blocked.
std::pair<double, bool> sweep(double from, double delta, double across, bool along_x) {
    double to = from + delta;
    bool blocked = false;
    for (const Rect& r : PointMazeTrap::walls()) {
        const double lo = along_x ? r.x_low : r.y_low;
        const double hi = along_x ? r.x_high : r.y_high;
        const double c_lo = along_x ? r.y_low : r.x_low;
        const double c_hi = along_x ? r.y_high : r.x_high;
        if (!(across > c_lo && across < c_hi)) continue;
        if (delta > 0.0 && from <= lo && to > lo) {
            to = lo;
            blocked = true;
        } else if (delta < 0.0 && from >= hi && to < hi) {
            to = hi;
            blocked = true;
        }
    }
    const double w = PointMazeTrap::arena_half_width;
    if (to > w) {
        to = w;
        blocked = true;
    } else if (to < -w) {
        to = -w;
        blocked = true;
    }
    return {to, blocked};
}

} // namespace

PointMazeTrap::PointMazeTrap() : Environment(point_maze_spec()) {}

const std::array<Rect, 3>& PointMazeTrap::walls() {
    // The pocket is x in [0.5, 1.5], y in [-1, 1], closed by the back wall at
    // x = 1.5 and open toward -x. The back wall overlaps both arms so there is no
    // seam at y = +-1.
    static const std::array<Rect, 3> w{{
        {1.5, 2.5, -1.2, 1.2},
        {0.5, 2.5, 1.0, 1.2},
        {0.5, 2.5, -1.2, -1.0},
    }};
    return w;
}

State PointMazeTrap::reset(Rng&) const { return {0.0, 0.0, 0.0, 0.0}; }

std::vector<float> PointMazeTrap::observe(const State& s) const {
    return {float(s[0] / arena_half_width), float(s[1] / arena_half_width), float(s[2] / max_speed),
            float(s[3] / max_speed)};
}

std::vector<double> PointMazeTrap::final_state_descriptor(const State& s) const {
    const double w = arena_half_width;
    return {(s[0] + w) / (2 * w), (s[1] + w) / (2 * w)};
}

StepResult PointMazeTrap::transition(const State& s, std::span<const double> a) const {
    double vx = s[2] + accel_scale * a[0];
    double vy = s[3] + accel_scale * a[1];
    const double speed = std::hypot(vx, vy);
    if (speed > max_speed) {
        vx *= max_speed / speed;
        vy *= max_speed / speed;
    }
    auto [x, blocked_x] = sweep(s[0], vx, s[1], true);
    if (blocked_x) vx = 0.0;
    auto [y, blocked_y] = sweep(s[1], vy, x, false);
    if (blocked_y) vy = 0.0;

    StepResult r;
    r.reward = (x - s[0]) - action_cost * (a[0] * a[0] + a[1] * a[1]);
    r.next = {x, y, vx, vy};
    return r;
}

} // namespace pbtme::env
