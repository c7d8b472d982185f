#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pbtme/rng.hpp"

namespace pbtme::rl {

enum class Algo { td3, sac };

std::string to_string(Algo a);
Algo algo_from_string(const std::string& s);

enum class Scale { linear, log };

struct HyperparamDef {
    std::string name;
    double low = 0.0;
    double high = 0.0;
    std::optional<double> fixed;  // set for hyperparameters that never change
    Scale scale = Scale::linear;

    bool is_ranged() const { return !fixed.has_value(); }
    bool admits(double v) const;
    bool operator==(const HyperparamDef&) const = default;
};

/// Ordered set of hyperparameter definitions; sampling draws in this order.
struct HyperparamSchema {
    std::vector<HyperparamDef> defs;

    const HyperparamDef* find(const std::string& name) const;
    HyperparamDef& at(const std::string& name);
    std::vector<std::string> ranged_names() const;
    void validate() const;
    bool operator==(const HyperparamSchema&) const = default;
};

using Hyperparams = std::map<std::string, double>;

/// Default ranges for TD3 agents.
HyperparamSchema td3_schema();
/// Default ranges for SAC agents.
HyperparamSchema sac_schema();
HyperparamSchema default_schema(Algo algo);

Hyperparams sample_hyperparams(const HyperparamSchema& schema, Rng& rng);

/// True when every schema entry is present in `h` and admissible.
bool conforms(const HyperparamSchema& schema, const Hyperparams& h);

} // namespace pbtme::rl
