#include "pbtme/rl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pbtme/errors.hpp"
#include "pbtme/rl/losses.hpp"

namespace pbtme::rl {

nn::MlpSpec AgentShape::actor() const {
    nn::MlpSpec s;
    s.layer_sizes.push_back(state_dim);
    s.layer_sizes.insert(s.layer_sizes.end(), hidden.begin(), hidden.end());
    if (algo == Algo::td3) {
        s.layer_sizes.push_back(action_dim);
        s.output = nn::Activation::tanh;
    } else {
        s.layer_sizes.push_back(2 * action_dim);
        s.output = nn::Activation::identity;
    }
    s.hidden = nn::Activation::relu;
    return s;
}

nn::MlpSpec AgentShape::critic() const {
    nn::MlpSpec s;
    s.layer_sizes.push_back(state_dim + action_dim);
    s.layer_sizes.insert(s.layer_sizes.end(), hidden.begin(), hidden.end());
    s.layer_sizes.push_back(1);
    s.hidden = nn::Activation::relu;
    s.output = nn::Activation::identity;
    return s;
}

std::vector<PhiComponent> phi_layout(const AgentShape& shape) {
    const std::size_t c = shape.critic().param_count();
    if (shape.algo == Algo::td3)
        return {{"critic1", c},
                {"critic2", c},
                {"target_actor", shape.actor().param_count()},
                {"target_critic1", c},
                {"target_critic2", c}};
    return {{"critic1", c}, {"critic2", c}, {"target_critic1", c}, {"target_critic2", c}, {"log_alpha", 1}};
}

double Agent::hyper(const std::string& name) const {
    auto it = h.find(name);
    if (it == h.end()) throw ContractViolation("agent has no hyperparameter '" + name + "'");
    return it->second;
}

float Agent::log_alpha() const {
    if (shape.algo != Algo::sac || phi.size() <= phi::sac_log_alpha) throw ContractViolation("agent has no temperature");
    return phi[phi::sac_log_alpha][0];
}

std::size_t Agent::learnable_count() const {
    std::size_t n = theta.size();
    for (const auto& p : phi) n += p.size();
    return n;
}

std::vector<float> Agent::learnables() const {
    std::vector<float> out;
    out.reserve(learnable_count());
    out.insert(out.end(), theta.begin(), theta.end());
    for (const auto& p : phi) out.insert(out.end(), p.begin(), p.end());
    return out;
}

void Agent::set_learnables(std::span<const float> flat) {
    if (flat.size() != learnable_count()) throw ContractViolation("learnable vector has the wrong length");
    auto it = flat.begin();
    std::copy_n(it, theta.size(), theta.begin());
    it += theta.size();
    for (auto& p : phi) {
        std::copy_n(it, p.size(), p.begin());
        it += p.size();
    }
}

Agent make_agent(const AgentShape& shape, Rng& theta_rng, Rng& phi_rng, Hyperparams h) {
    Agent a;
    a.shape = shape;
    a.theta = nn::init_params(shape.actor(), theta_rng);
    const auto critic = shape.critic();
    auto c1 = nn::init_params(critic, phi_rng);
    auto c2 = nn::init_params(critic, phi_rng);
    if (shape.algo == Algo::td3) {
        a.phi = {c1, c2, a.theta, c1, c2};
    } else {
        auto it = h.find("alpha_init");
        const double alpha0 = it == h.end() ? 1.0 : it->second;
        if (!(alpha0 > 0.0)) throw ConfigError("alpha_init must be positive");
        a.phi = {c1, c2, c1, c2, {float(std::log(alpha0))}};
    }
    a.h = std::move(h);
    return a;
}

Agent make_policy_agent(const AgentShape& shape, Rng& theta_rng) {
    Agent a;
    a.shape = shape;
    a.theta = nn::init_params(shape.actor(), theta_rng);
    return a;
}

void validate_agent(const Agent& agent, const HyperparamSchema* schema) {
    if (agent.theta.size() != agent.shape.actor().param_count()) throw ContractViolation("theta does not match actor shape");
    if (agent.has_learner()) {
        const auto layout = phi_layout(agent.shape);
        if (agent.phi.size() != layout.size()) throw ContractViolation("phi has the wrong number of components");
        for (std::size_t i = 0; i < layout.size(); ++i)
            if (agent.phi[i].size() != layout[i].size)
                throw ContractViolation("phi component '" + layout[i].name + "' has the wrong size");
    }
    if (schema && !conforms(*schema, agent.h)) throw ContractViolation("hyperparameters do not conform to the schema");
}

bool structurally_compatible(const Agent& a, const Agent& b) {
    if (!(a.shape == b.shape) || a.theta.size() != b.theta.size() || a.phi.size() != b.phi.size()) return false;
    for (std::size_t i = 0; i < a.phi.size(); ++i)
        if (a.phi[i].size() != b.phi[i].size()) return false;
    if (a.h.size() != b.h.size()) return false;
    for (auto ia = a.h.begin(), ib = b.h.begin(); ia != a.h.end(); ++ia, ++ib)
        if (ia->first != ib->first) return false;
    return true;
}

std::vector<float> exploit_action(const Agent& agent, std::span<const float> obs) {
    auto out = nn::forward(agent.shape.actor(), agent.theta, obs);
    if (agent.shape.algo == Algo::sac) {
        out.resize(agent.shape.action_dim);
        for (float& v : out) v = std::tanh(v);
    }
    return out;
}

std::vector<float> explore_action(const Agent& agent, std::span<const float> obs, Rng& rng) {
    auto out = nn::forward(agent.shape.actor(), agent.theta, obs);
    const int A = agent.shape.action_dim;
    std::normal_distribution<float> normal(0.f, 1.f);
    if (agent.shape.algo == Algo::td3) {
        const float sigma = float(agent.hyper("exploration_noise"));
        for (float& v : out) v = std::clamp(v + sigma * normal(rng), -1.f, 1.f);
        return out;
    }
    std::vector<float> a(A);
    for (int i = 0; i < A; ++i) {
        const float sd = loss::softplus(out[A + i]) + float(loss::sac_min_std);
        a[i] = std::tanh(out[i] + sd * normal(rng));
    }
    return a;
}

TrainState make_train_state(const Agent& agent) {
    TrainState s;
    s.actor = nn::AdamState(agent.theta.size());
    if (agent.has_learner()) {
        s.critic1 = nn::AdamState(agent.phi[phi::critic1].size());
        s.critic2 = nn::AdamState(agent.phi[phi::critic2].size());
        if (agent.shape.algo == Algo::sac) s.alpha = nn::AdamState(1);
    }
    return s;
}

} // namespace pbtme::rl
