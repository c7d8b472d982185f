#include "pbtme/rl/rollout.hpp"

#include "pbtme/errors.hpp"

namespace pbtme::rl {

Evaluation evaluate(const Agent& agent, const env::Environment& env, Rng& rng, env::Trajectory* log) {
    const int T = env.spec().episode_length;
    env::Trajectory local;
    env::Trajectory& traj = log ? *log : local;
    traj = {};
    traj.states.reserve(T + 1);
    traj.states.push_back(env.reset(rng));
    Evaluation e;
    for (int t = 0; t < T; ++t) {
        const auto obs = env.observe(traj.states.back());
        auto action = exploit_action(agent, obs);
        auto r = env.step(traj.states.back(), action);
        e.fitness += r.reward;
        traj.rewards.push_back(r.reward);
        traj.actions.push_back(std::move(action));
        traj.states.push_back(std::move(r.next));
    }
    e.steps = T;
    e.descriptor = env.descriptor(traj);
    return e;
}

void ExperienceCollector::step(const Agent& agent, ReplayBuffer& buffer, Rng& rng) {
    if (!in_episode_) {
        state_ = env_->reset(rng);
        obs_ = env_->observe(state_);
        t_ = 0;
        in_episode_ = true;
    }
    const auto action = explore_action(agent, obs_, rng);
    auto r = env_->step(state_, action);
    ++t_;
    const bool done = t_ == env_->spec().episode_length;
    auto next_obs = env_->observe(r.next);
    buffer.add(obs_, action, float(r.reward), next_obs, done);
    state_ = std::move(r.next);
    obs_ = std::move(next_obs);
    if (done) in_episode_ = false;
}

std::int64_t collect_experience(const Agent& agent, const env::Environment& env, int num_steps, ReplayBuffer& buffer,
                                Rng& rng) {
    if (num_steps < 1) throw ContractViolation("collect_experience needs num_steps >= 1");
    ExperienceCollector c(env);
    for (int i = 0; i < num_steps; ++i) c.step(agent, buffer, rng);
    return num_steps;
}

} // namespace pbtme::rl
