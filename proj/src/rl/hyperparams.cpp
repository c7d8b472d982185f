#include "pbtme/rl/hyperparams.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pbtme/errors.hpp"

namespace pbtme::rl {

std::string to_string(Algo a) { return a == Algo::td3 ? "td3" : "sac"; }

Algo algo_from_string(const std::string& s) {
    if (s == "td3") return Algo::td3;
    if (s == "sac") return Algo::sac;
    throw ConfigError("unknown algorithm '" + s + "' (expected td3 or sac)");
}

bool HyperparamDef::admits(double v) const {
    if (!std::isfinite(v)) return false;
    if (fixed) return v == *fixed;
    return v >= low && v <= high;
}

const HyperparamDef* HyperparamSchema::find(const std::string& name) const {
    for (const auto& d : defs)
        if (d.name == name) return &d;
    return nullptr;
}

HyperparamDef& HyperparamSchema::at(const std::string& name) {
    for (auto& d : defs)
        if (d.name == name) return d;
    throw ConfigError("unknown hyperparameter '" + name + "'");
}

std::vector<std::string> HyperparamSchema::ranged_names() const {
    std::vector<std::string> out;
    for (const auto& d : defs)
        if (d.is_ranged()) out.push_back(d.name);
    return out;
}

void HyperparamSchema::validate() const {
    for (std::size_t i = 0; i < defs.size(); ++i) {
        const auto& d = defs[i];
        for (std::size_t j = 0; j < i; ++j)
            if (defs[j].name == d.name) throw ConfigError("hyperparameter '" + d.name + "' declared twice");
        if (d.fixed) {
            if (!std::isfinite(*d.fixed)) throw ConfigError("hyperparameter '" + d.name + "' has a non-finite value");
            continue;
        }
        if (!(d.low < d.high) || !std::isfinite(d.low) || !std::isfinite(d.high))
            throw ConfigError("hyperparameter '" + d.name + "' needs low < high");
        if (d.scale == Scale::log && d.low <= 0.0)
            throw ConfigError("hyperparameter '" + d.name + "' is log-scaled but its range is not positive");
    }
}

namespace {

HyperparamDef ranged(std::string name, double lo, double hi, Scale s = Scale::linear) {
    return {std::move(name), lo, hi, std::nullopt, s};
}

HyperparamDef fixed(std::string name, double v) { return {std::move(name), v, v, v, Scale::linear}; }

} // namespace

HyperparamSchema td3_schema() {
    return {{
        ranged("gamma", 0.9, 1.0),
        ranged("policy_lr", 3e-5, 3e-3, Scale::log),
        ranged("critic_lr", 3e-5, 3e-3, Scale::log),
        ranged("noise_clip", 0.0, 1.0),
        ranged("policy_noise", 0.0, 1.0),
        ranged("exploration_noise", 0.0, 0.2),
        fixed("tau", 0.005),
        fixed("batch_size", 256),
    }};
}

HyperparamSchema sac_schema() {
    return {{
        ranged("gamma", 0.9, 1.0),
        ranged("policy_lr", 3e-5, 3e-3, Scale::log),
        ranged("critic_lr", 3e-5, 3e-3, Scale::log),
        ranged("alpha_lr", 3e-5, 3e-3, Scale::log),
        ranged("reward_scale", 0.1, 10.0),
        fixed("tau", 0.005),
        fixed("alpha_init", 1.0),
        fixed("batch_size", 256),
    }};
}

HyperparamSchema default_schema(Algo algo) { return algo == Algo::td3 ? td3_schema() : sac_schema(); }

Hyperparams sample_hyperparams(const HyperparamSchema& schema, Rng& rng) {
    Hyperparams h;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto& d : schema.defs) {
        if (d.fixed) {
            h[d.name] = *d.fixed;
            continue;
        }
        const double u = unit(rng);
        double v;
        if (d.scale == Scale::log) {
            const double lo = std::log(d.low), hi = std::log(d.high);
            v = std::exp(lo + u * (hi - lo));
        } else {
            v = d.low + u * (d.high - d.low);
        }
        h[d.name] = std::clamp(v, d.low, d.high);
    }
    return h;
}

bool conforms(const HyperparamSchema& schema, const Hyperparams& h) {
    for (const auto& d : schema.defs) {
        auto it = h.find(d.name);
        if (it == h.end() || !d.admits(it->second)) return false;
    }
    return true;
}

} // namespace pbtme::rl
