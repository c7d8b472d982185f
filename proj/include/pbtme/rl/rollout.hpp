#pragma once

#include <cstdint>
#include <vector>

#include "pbtme/env/environment.hpp"
#include "pbtme/rl/agent.hpp"
#include "pbtme/rl/replay_buffer.hpp"

namespace pbtme::rl {

struct Evaluation {
    double fitness = 0.0;             // undiscounted, unscaled return
    std::vector<double> descriptor;
    int steps = 0;
};

/// One full episode in exploitation mode. Nothing is buffered.
Evaluation evaluate(const Agent& agent, const env::Environment& env, Rng& rng, env::Trajectory* log = nullptr);

/// Steps an exploration policy through consecutive episodes, one environment step
/// at a time, appending every transition to a replay buffer.
class ExperienceCollector {
public:
    explicit ExperienceCollector(const env::Environment& env) : env_(&env) {}

    void step(const Agent& agent, ReplayBuffer& buffer, Rng& rng);
    /// Drop the current episode; the next step starts from reset.
    void restart() { in_episode_ = false; }
    int episode_step() const { return t_; }

private:
    const env::Environment* env_;
    env::State state_;
    std::vector<float> obs_;
    int t_ = 0;
    bool in_episode_ = false;
};

/// Collects exactly num_steps exploration transitions starting from a fresh episode;
/// a trailing partial episode is kept without a terminal flag.
std::int64_t collect_experience(const Agent& agent, const env::Environment& env, int num_steps, ReplayBuffer& buffer,
                                Rng& rng);

} // namespace pbtme::rl
