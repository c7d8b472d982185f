#pragma once

#include <optional>
#include <string>

#include "pbtme/rl/agent.hpp"
#include "pbtme/rl/replay_buffer.hpp"

namespace pbtme::rl {

inline constexpr int td3_policy_delay = 2;

struct TrainDiagnostics {
    bool applied = false;         // false when the buffer held fewer transitions than a batch
    bool nonfinite = false;       // an update was skipped because a gradient was not finite
    double critic_loss = 0.0;
    std::optional<double> actor_loss;
    std::optional<double> alpha_loss;
    std::optional<double> alpha;
    std::string note;
};

/// One twin-delayed deterministic actor-critic update, in place. Critics are
/// updated every call; actor and targets every td3_policy_delay calls.
TrainDiagnostics td3_train_step(Agent& agent, TrainState& state, const ReplayBuffer& buffer, Rng& rng);

/// One soft actor-critic update (critics, actor, temperature, targets), in place.
/// The target entropy is -action_dim.
TrainDiagnostics sac_train_step(Agent& agent, TrainState& state, const ReplayBuffer& buffer, Rng& rng);

TrainDiagnostics train_step(Agent& agent, TrainState& state, const ReplayBuffer& buffer, Rng& rng);

/// target <- target + tau * (source - target)
void polyak_update(nn::FlatParams& target, const nn::FlatParams& source, float tau);

} // namespace pbtme::rl
