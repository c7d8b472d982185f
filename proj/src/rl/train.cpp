#include "pbtme/rl/train.hpp"

#include <cmath>
#include <random>

#include "pbtme/errors.hpp"
#include "pbtme/rl/losses.hpp"

namespace pbtme::rl {

namespace {

nn::Matrix<float> standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<float> normal(0.f, 1.f);
    nn::Matrix<float> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

bool ready(const Agent& agent, const ReplayBuffer& buffer, std::size_t& batch, TrainDiagnostics& d) {
    if (!agent.has_learner()) throw ContractViolation("policy-only agents cannot be trained");
    batch = std::size_t(agent.hyper("batch_size"));
    if (buffer.size() < batch) {
        d.note = "replay buffer holds " + std::to_string(buffer.size()) + " < " + std::to_string(batch) + " transitions";
        return false;
    }
    return true;
}

bool apply(nn::AdamState& st, nn::FlatParams& p, const std::vector<float>& g, double lr, TrainDiagnostics& d) {
    if (!nn::adam_update(st, p, g, float(lr))) {
        d.nonfinite = true;
        return false;
    }
    return true;
}

} // namespace

void polyak_update(nn::FlatParams& target, const nn::FlatParams& source, float tau) {
    if (target.size() != source.size()) throw ContractViolation("polyak: size mismatch");
    for (std::size_t i = 0; i < target.size(); ++i) target[i] += tau * (source[i] - target[i]);
}

TrainDiagnostics td3_train_step(Agent& agent, TrainState& state, const ReplayBuffer& buffer, Rng& rng) {
    TrainDiagnostics d;
    std::size_t B;
    if (!ready(agent, buffer, B, d)) return d;
    d.applied = true;

    const auto actor = agent.shape.actor();
    const auto critic = agent.shape.critic();
    const auto batch = buffer.sample(B, rng);
    const auto xi = standard_normal(agent.shape.action_dim, Eigen::Index(B), rng);

    std::vector<float> g1(critic.param_count(), 0.f), g2(critic.param_count(), 0.f);
    d.critic_loss = loss::td3_critic<float>(actor, critic, agent.phi[phi::td3_target_actor], agent.phi[phi::critic1],
                                            agent.phi[phi::critic2], agent.phi[phi::td3_target_critic1],
                                            agent.phi[phi::td3_target_critic2], batch, xi, float(agent.hyper("gamma")),
                                            float(agent.hyper("policy_noise")), float(agent.hyper("noise_clip")), g1, g2);
    const double critic_lr = agent.hyper("critic_lr");
    apply(state.critic1, agent.phi[phi::critic1], g1, critic_lr, d);
    apply(state.critic2, agent.phi[phi::critic2], g2, critic_lr, d);

    ++state.updates;
    if (state.updates % td3_policy_delay == 0) {
        std::vector<float> ga(actor.param_count(), 0.f);
        d.actor_loss = loss::td3_actor<float>(actor, critic, agent.theta, agent.phi[phi::critic1], batch.state, ga);
        apply(state.actor, agent.theta, ga, agent.hyper("policy_lr"), d);
        const float tau = float(agent.hyper("tau"));
        polyak_update(agent.phi[phi::td3_target_actor], agent.theta, tau);
        polyak_update(agent.phi[phi::td3_target_critic1], agent.phi[phi::critic1], tau);
        polyak_update(agent.phi[phi::td3_target_critic2], agent.phi[phi::critic2], tau);
    }
    return d;
}

TrainDiagnostics sac_train_step(Agent& agent, TrainState& state, const ReplayBuffer& buffer, Rng& rng) {
    TrainDiagnostics d;
    std::size_t B;
    if (!ready(agent, buffer, B, d)) return d;
    d.applied = true;

    const auto actor = agent.shape.actor();
    const auto critic = agent.shape.critic();
    const auto A = agent.shape.action_dim;
    const auto batch = buffer.sample(B, rng);
    const auto eps_next = standard_normal(A, Eigen::Index(B), rng);
    const auto eps = standard_normal(A, Eigen::Index(B), rng);
    const float log_alpha = agent.log_alpha();

    std::vector<float> g1(critic.param_count(), 0.f), g2(critic.param_count(), 0.f);
    d.critic_loss = loss::sac_critic<float>(actor, critic, agent.theta, agent.phi[phi::critic1], agent.phi[phi::critic2],
                                            agent.phi[phi::sac_target_critic1], agent.phi[phi::sac_target_critic2],
                                            log_alpha, batch, eps_next, float(agent.hyper("gamma")),
                                            float(agent.hyper("reward_scale")), g1, g2);
    const double critic_lr = agent.hyper("critic_lr");
    apply(state.critic1, agent.phi[phi::critic1], g1, critic_lr, d);
    apply(state.critic2, agent.phi[phi::critic2], g2, critic_lr, d);

    std::vector<float> ga(actor.param_count(), 0.f);
    nn::Matrix<float> log_prob;
    d.actor_loss = loss::sac_actor<float>(actor, critic, agent.theta, agent.phi[phi::critic1], agent.phi[phi::critic2],
                                          log_alpha, batch.state, eps, ga, &log_prob);
    apply(state.actor, agent.theta, ga, agent.hyper("policy_lr"), d);

    float g_alpha = 0.f;
    d.alpha_loss = loss::sac_alpha<float>(log_alpha, log_prob, -float(A), &g_alpha);
    apply(state.alpha, agent.phi[phi::sac_log_alpha], {g_alpha}, agent.hyper("alpha_lr"), d);
    d.alpha = std::exp(double(agent.log_alpha()));

    const float tau = float(agent.hyper("tau"));
    polyak_update(agent.phi[phi::sac_target_critic1], agent.phi[phi::critic1], tau);
    polyak_update(agent.phi[phi::sac_target_critic2], agent.phi[phi::critic2], tau);
    ++state.updates;
    return d;
}

TrainDiagnostics train_step(Agent& agent, TrainState& state, const ReplayBuffer& buffer, Rng& rng) {
    return agent.shape.algo == Algo::td3 ? td3_train_step(agent, state, buffer, rng)
                                         : sac_train_step(agent, state, buffer, rng);
}

} // namespace pbtme::rl
