#pragma once

#include <span>
#include <string>
#include <vector>

#include "pbtme/nn/adam.hpp"
#include "pbtme/nn/mlp.hpp"
#include "pbtme/rl/hyperparams.hpp"
#include "pbtme/rng.hpp"

namespace pbtme::rl {

/// Network architecture shared by every agent of a run.
struct AgentShape {
    Algo algo = Algo::td3;
    int state_dim = 0;
    int action_dim = 0;
    std::vector<int> hidden{64, 64};

    /// TD3: tanh-bounded deterministic actor. SAC: mean and pre-softplus scale per action.
    nn::MlpSpec actor() const;
    nn::MlpSpec critic() const;

    bool operator==(const AgentShape&) const = default;
};

/// Named slots of the learnable-parameter collection.
struct PhiComponent {
    std::string name;
    std::size_t size;
};

/// TD3: critic1, critic2, target_actor, target_critic1, target_critic2.
/// SAC: critic1, critic2, target_critic1, target_critic2, log_alpha.
std::vector<PhiComponent> phi_layout(const AgentShape& shape);

namespace phi {
inline constexpr std::size_t critic1 = 0;
inline constexpr std::size_t critic2 = 1;
inline constexpr std::size_t td3_target_actor = 2;
inline constexpr std::size_t td3_target_critic1 = 3;
inline constexpr std::size_t td3_target_critic2 = 4;
inline constexpr std::size_t sac_target_critic1 = 2;
inline constexpr std::size_t sac_target_critic2 = 3;
inline constexpr std::size_t sac_log_alpha = 4;
} // namespace phi

/// Policy parameters, the other learnable parameters and the hyperparameters.
/// Policy-only agents (used by plain MAP-Elites) have empty phi and h.
struct Agent {
    AgentShape shape;
    nn::FlatParams theta;
    std::vector<nn::FlatParams> phi;
    Hyperparams h;

    bool has_learner() const { return !phi.empty(); }
    double hyper(const std::string& name) const;
    float log_alpha() const;

    /// Concatenation theta ++ phi[0] ++ phi[1] ++ ...
    std::vector<float> learnables() const;
    void set_learnables(std::span<const float> flat);
    std::size_t learnable_count() const;

    bool operator==(const Agent&) const = default;
};

Agent make_agent(const AgentShape& shape, Rng& theta_rng, Rng& phi_rng, Hyperparams h);
Agent make_policy_agent(const AgentShape& shape, Rng& theta_rng);

/// Throws ContractViolation if shapes or targets are inconsistent, or if `schema`
/// is given and h does not conform to it.
void validate_agent(const Agent& agent, const HyperparamSchema* schema = nullptr);

bool structurally_compatible(const Agent& a, const Agent& b);

/// Deterministic action used for evaluation.
std::vector<float> exploit_action(const Agent& agent, std::span<const float> obs);
/// Noisy / sampled action used to collect experience.
std::vector<float> explore_action(const Agent& agent, std::span<const float> obs, Rng& rng);

/// Optimizer state that belongs to a training slot rather than to the agent.
struct TrainState {
    nn::AdamState actor;
    nn::AdamState critic1;
    nn::AdamState critic2;
    nn::AdamState alpha;
    std::int64_t updates = 0;
};

TrainState make_train_state(const Agent& agent);

} // namespace pbtme::rl
