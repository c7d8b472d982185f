#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include "pbtme/env/planar_arm.hpp"
#include "pbtme/errors.hpp"
#include "pbtme/env/point_maze.hpp"

using namespace pbtme;
using namespace pbtme::env;

namespace {

using Actions = std::vector<std::vector<float>>;

Trajectory roll(const Environment& e, const Actions& actions) {
    Rng rng(0);
    return replay(e, actions, rng);
}

double total(const Trajectory& t) {
    double s = 0.0;
    for (double r : t.rewards) s += r;
    return s;
}

Actions constant(int T, std::vector<float> a) { return Actions(T, a); }

Actions random_actions(int T, int dim, Rng& rng) {
    std::uniform_real_distribution<float> u(-1.5f, 1.5f);  // deliberately exceeds the box
    Actions out(T, std::vector<float>(dim));
    for (auto& a : out)
        for (auto& v : a) v = u(rng);
    return out;
}

} // namespace

TEST_CASE("point maze: zero actions stay at the start with zero return") {
    PointMazeTrap e;
    const auto t = roll(e, constant(100, {0.f, 0.f}));
    CHECK(total(t) == 0.0);
    CHECK(t.states.back() == State{0, 0, 0, 0});
    CHECK(e.descriptor(t) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("point maze: greedy throttle is caught by the trap") {
    // Independent 1-D integration: y stays 0, so only the x axis moves and the
    // back wall of the pocket sits at x = 1.5.
    double x = 0.0, v = 0.0, ret = 0.0;
    for (int t = 0; t < 100; ++t) {
        v = std::min(v + 0.1, 0.5);
        double nx = x + v;
        if (nx > 1.5) {
            nx = 1.5;
            v = 0.0;
        }
        ret += (nx - x) - 0.01;
        x = nx;
    }
    PointMazeTrap e;
    const auto traj = roll(e, constant(100, {1.f, 0.f}));
    double max_x = -1e9;
    for (const auto& s : traj.states) max_x = std::max(max_x, s[0]);
    CHECK(max_x <= 1.5);
    CHECK(traj.states.back()[0] == doctest::Approx(x).epsilon(1e-12));
    CHECK(total(traj) == doctest::Approx(ret).epsilon(1e-12));
    CHECK(total(traj) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("point maze: a scripted detour beats the greedy policy") {
    PointMazeTrap e;
    Actions detour;
    for (int t = 0; t < 8; ++t) detour.push_back({0.f, 1.f});   // climb above the upper arm
    for (int t = 0; t < 6; ++t) detour.push_back({1.f, -1.f});  // turn toward +x
    while (detour.size() < 100) detour.push_back({1.f, 0.f});
    const auto t = roll(e, detour);
    const double greedy = total(roll(e, constant(100, {1.f, 0.f})));
    CHECK(t.states.back()[0] > 2.5);
    CHECK(total(t) > greedy);
}

TEST_CASE("point maze: velocity cap, clipping and wall faces") {
    PointMazeTrap e;
    Rng rng(1);
    const auto big = roll(e, constant(100, {5.f, 0.f}));
    CHECK(big.states == roll(e, constant(100, {1.f, 0.f})).states);
    for (int trial = 0; trial < 200; ++trial) {
        const auto t = roll(e, random_actions(100, 2, rng));
        for (const auto& s : t.states) {
            CHECK(std::hypot(s[2], s[3]) <= 0.5 + 1e-12);
            CHECK(std::abs(s[0]) <= 5.0);
            CHECK(std::abs(s[1]) <= 5.0);
            // Never inside a wall.
            for (const auto& w : PointMazeTrap::walls())
                CHECK_FALSE((s[0] > w.x_low && s[0] < w.x_high && s[1] > w.y_low && s[1] < w.y_high));
        }
    }
}

TEST_CASE("point maze: returns respect the declared bound and offset") {
    PointMazeTrap e;
    Rng rng(2);
    double worst = 1e9;
    for (int trial = 0; trial < 500; ++trial) {
        const double r = total(roll(e, random_actions(100, 2, rng)));
        worst = std::min(worst, r);
        CHECK(r >= e.spec().min_return - 1e-9);
        CHECK(r + e.spec().fitness_offset >= 0.0);
    }
    // Backing into the left wall at full throttle is the worst case we can script.
    const double backwards = total(roll(e, constant(100, {-1.f, 0.f})));
    CHECK(backwards == doctest::Approx(-5.0 - 1.0).epsilon(1e-9));
    CHECK(backwards >= e.spec().min_return);
    CHECK(e.spec().fitness_offset == 51.0);
}

TEST_CASE("planar arm: straight arm") {
    PlanarArm e;
    const auto t = roll(e, constant(10, std::vector<float>(8, 0.f)));
    CHECK(total(t) == 0.0);
    const auto ee = PlanarArm::end_effector(t.states.back());
    CHECK(ee[0] == doctest::Approx(1.0));
    CHECK(std::abs(ee[1]) < 1e-15);
    CHECK(e.descriptor(t) == std::vector<double>{1.0, 0.5});
}

TEST_CASE("planar arm: equal deltas keep zero spread") {
    PlanarArm e;
    CHECK(std::abs(total(roll(e, constant(10, std::vector<float>(8, 0.7f))))) < 1e-12);
}

TEST_CASE("planar arm: descriptor matches complex-number kinematics") {
    PlanarArm e;
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const auto t = roll(e, random_actions(10, 8, rng));
        std::complex<double> tip = 0.0, heading = 1.0;
        for (double a : t.states.back()) {
            heading *= std::polar(1.0, a);
            tip += heading / 8.0;
        }
        const auto d = e.descriptor(t);
        CHECK(std::abs(d[0] - (tip.real() + 1) / 2) < 1e-6);
        CHECK(std::abs(d[1] - (tip.imag() + 1) / 2) < 1e-6);
        CHECK(total(t) >= e.spec().min_return);
        CHECK(total(t) + e.spec().fitness_offset >= 0.0);
    }
}

TEST_CASE("trajectory logs replay bit-exactly") {
    for (const auto& name : environment_names()) {
        auto e = make_environment(name);
        Rng rng(9);
        const auto original = roll(*e, random_actions(e->spec().episode_length, e->spec().action_dim, rng));
        std::stringstream log;
        write_trajectory_log(original, log);
        const auto steps = read_trajectory_log(log, e->spec().state_dim, e->spec().action_dim);
        REQUIRE(steps.size() == original.length());
        Actions actions;
        for (const auto& s : steps) actions.push_back(s.action);
        const auto again = roll(*e, actions);
        CHECK(again.states == original.states);
        CHECK(again.rewards == original.rewards);
        CHECK(e->descriptor(again) == e->descriptor(original));
    }
}

TEST_CASE("descriptors stay in bounds and depend only on the final state") {
    for (const auto& name : environment_names()) {
        auto e = make_environment(name);
        Rng rng(12);
        for (int i = 0; i < 100; ++i) {
            const auto t = roll(*e, random_actions(e->spec().episode_length, e->spec().action_dim, rng));
            CHECK(e->spec().bd_bounds.contains(e->descriptor(t)));
            auto other = t;
            other.states[1] = other.states[0];
            CHECK(e->descriptor(other) == e->descriptor(t));
        }
    }
}

TEST_CASE("step counter and contract checks") {
    PointMazeTrap e;
    roll(e, constant(100, {0.f, 1.f}));
    CHECK(e.steps_taken() == 100);
    e.reset_counter();
    CHECK(e.steps_taken() == 0);
    CHECK_THROWS_AS(e.step(State{0, 0, 0, 0}, std::vector<float>{1.f}), ContractViolation);
    CHECK_THROWS_AS(make_environment("ant"), ConfigError);
    Trajectory short_traj;
    short_traj.states = {State{0, 0, 0, 0}};
    CHECK_THROWS_AS(e.descriptor(short_traj), ContractViolation);
}
