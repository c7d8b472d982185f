#include "pbtme/env/planar_arm.hpp"

#include <cmath>

namespace pbtme::env {

namespace {

EnvSpec planar_arm_spec() {
    EnvSpec s;
    s.name = "planar-arm";
    s.state_dim = PlanarArm::num_links;
    s.action_dim = PlanarArm::num_links;
    s.episode_length = PlanarArm::horizon;
    s.bd_dim = 2;
    s.bd_bounds = Box{{0.0, 0.0}, {1.0, 1.0}};
    // Angles stay within +-delta_scale * T = +-1 rad, so each step's spread is at most 1.
    s.min_return = -double(PlanarArm::horizon);
    s.fitness_offset = double(PlanarArm::horizon);
    return s;
}

} // namespace

PlanarArm::PlanarArm() : Environment(planar_arm_spec()) {}

State PlanarArm::reset(Rng&) const { return State(num_links, 0.0); }

std::vector<float> PlanarArm::observe(const State& s) const {
    std::vector<float> o(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) o[i] = float(s[i]);
    return o;
}

std::array<double, 2> PlanarArm::end_effector(const State& angles) {
    double x = 0.0, y = 0.0, cumulative = 0.0;
    for (double a : angles) {
        cumulative += a;
        x += link_length * std::cos(cumulative);
        y += link_length * std::sin(cumulative);
    }
    return {x, y};
}

std::vector<double> PlanarArm::final_state_descriptor(const State& s) const {
    const auto [x, y] = end_effector(s);
    return {(x + 1.0) / 2.0, (y + 1.0) / 2.0};
}

StepResult PlanarArm::transition(const State& s, std::span<const double> a) const {
    StepResult r;
    r.next = s;
    double mean = 0.0;
    for (int i = 0; i < num_links; ++i) {
        r.next[i] += delta_scale * a[i];
        mean += r.next[i];
    }
    mean /= num_links;
    double var = 0.0;
    for (double v : r.next) var += (v - mean) * (v - mean);
    r.reward = -std::sqrt(var / num_links);
    return r;
}

} // namespace pbtme::env
