#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pbtme/rng.hpp"

namespace pbtme::env {

/// Axis-aligned box, one (low, high) pair per dimension.
struct Box {
    std::vector<double> low;
    std::vector<double> high;

    std::size_t dim() const { return low.size(); }
    bool contains(std::span<const double> p) const;
    std::vector<double> clip(std::span<const double> p) const;
    bool operator==(const Box&) const = default;
};

struct EnvSpec {
    std::string name;
    int state_dim = 0;
    int action_dim = 0;  // actions live in [-1, 1]^action_dim
    int episode_length = 0;
    int bd_dim = 0;
    Box bd_bounds;
    /// Added to every fitness in the QD-score; all achievable returns plus this are >= 0.
    double fitness_offset = 0.0;
    /// Smallest achievable episode return, derived from the dynamics.
    double min_return = 0.0;
};

using State = std::vector<double>;

struct StepResult {
    State next;
    double reward = 0.0;
};

/// A logged episode: states[0] is the start state, states[t + 1] follows actions[t].
struct Trajectory {
    std::vector<State> states;
    std::vector<std::vector<float>> actions;
    std::vector<double> rewards;

    std::size_t length() const { return actions.size(); }
};

/// Deterministic episodic MDP with a behavior descriptor. Dynamics are pure; the
/// only mutable member is a step counter used for budget audits.
class Environment {
public:
    explicit Environment(EnvSpec spec) : spec_(std::move(spec)) {}
    virtual ~Environment() = default;
    Environment(const Environment&) = delete;
    Environment& operator=(const Environment&) = delete;

    const EnvSpec& spec() const { return spec_; }

    /// Start state. Shipped envs ignore the rng (fixed start).
    virtual State reset(Rng& rng) const = 0;
    /// Applies an action (clipped into the box) and returns the next state and reward.
    StepResult step(const State& s, std::span<const float> action) const;
    /// Network input for a state.
    virtual std::vector<float> observe(const State& s) const = 0;
    /// Behavior descriptor of a full-length trajectory, inside bd_bounds.
    std::vector<double> descriptor(const Trajectory& traj) const;
    /// Descriptor as a function of the final state (both shipped envs use only that).
    virtual std::vector<double> final_state_descriptor(const State& s) const = 0;

    std::uint64_t steps_taken() const { return steps_.load(std::memory_order_relaxed); }
    void reset_counter() { steps_.store(0, std::memory_order_relaxed); }

protected:
    virtual StepResult transition(const State& s, std::span<const double> action) const = 0;

private:
    EnvSpec spec_;
    mutable std::atomic<std::uint64_t> steps_{0};
};

std::unique_ptr<Environment> make_environment(const std::string& name);
std::vector<std::string> environment_names();

/// Writes one line per step: step, state..., action..., reward.
void write_trajectory_log(const Trajectory& traj, std::ostream& os);

struct LoggedStep {
    std::size_t step = 0;
    State state;
    std::vector<float> action;
    double reward = 0.0;
};

std::vector<LoggedStep> read_trajectory_log(std::istream& is, int state_dim, int action_dim);

/// Re-simulates an action sequence from the start state.
Trajectory replay(const Environment& env, const std::vector<std::vector<float>>& actions, Rng& rng);

} // namespace pbtme::env
