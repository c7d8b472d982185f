#include "pbtme/config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pbtme/env/environment.hpp"
#include "pbtme/errors.hpp"

namespace pbtme {

std::string to_string(Runner r) {
    switch (r) {
        case Runner::pbt_me: return "pbt-me";
        case Runner::map_elites: return "map-elites";
        case Runner::pbt: return "pbt";
    }
    return "?";
}

Runner runner_from_string(const std::string& s) {
    if (s == "pbt-me") return Runner::pbt_me;
    if (s == "map-elites") return Runner::map_elites;
    if (s == "pbt") return Runner::pbt;
    throw ConfigError("run.runner: unknown runner '" + s + "' (expected pbt-me, map-elites or pbt)");
}

rl::AgentShape RunConfig::agent_shape(int state_dim, int action_dim) const {
    return {algo, state_dim, action_dim, hidden};
}

namespace {

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key + ": " + what);
}

bool is_fraction(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

} // namespace

void RunConfig::validate() const {
    const auto envs = env::environment_names();
    require(std::find(envs.begin(), envs.end(), env) != envs.end(), "run.env", "unknown environment '" + env + "'");
    require(threads >= 1, "run.threads", "must be >= 1");
    require(max_iterations >= -1, "run.max_iterations", "must be -1 (no cap) or >= 0");
    require(checkpoint_every >= 0, "run.checkpoint_every", "must be >= 0");

    require(population_size >= 0, "population.size", "must be >= 0");
    require(is_fraction(truncation_fraction), "population.truncation_fraction", "must lie in [0, 1]");
    require(is_fraction(top_fraction), "population.top_fraction", "must lie in [0, 1]");
    require(is_fraction(injection_fraction), "population.injection_fraction", "must lie in [0, 1]");
    require(train_steps >= 0, "population.train_steps", "must be >= 0");
    require(offspring >= 0, "variation.offspring", "must be >= 0");
    require(std::isfinite(isoline.sigma1) && isoline.sigma1 >= 0.0, "variation.sigma1", "must be finite and >= 0");
    require(std::isfinite(isoline.sigma2) && isoline.sigma2 >= 0.0, "variation.sigma2", "must be finite and >= 0");

    require(num_cells >= 1, "repertoire.num_cells", "must be >= 1");
    require(cvt_init_points >= num_cells, "repertoire.cvt_init_points", "must be >= repertoire.num_cells");
    require(!hidden.empty(), "network.hidden", "needs at least one hidden layer");
    for (int h : hidden) require(h >= 1, "network.hidden", "layer sizes must be >= 1");
    require(buffer_capacity >= 1, "replay.capacity", "must be >= 1");

    try {
        schema.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("hyperparams: ") + e.what());
    }
    for (const auto& def : rl::default_schema(algo).defs)
        require(schema.find(def.name) != nullptr, "hyperparams." + def.name, "missing from the schema");
    for (const auto& def : schema.defs)
        require(rl::default_schema(algo).find(def.name) != nullptr, "hyperparams." + def.name,
                "not a " + rl::to_string(algo) + " hyperparameter");
    if (const auto* b = schema.find("batch_size"))
        require(!b->is_ranged() && *b->fixed >= 1 && std::floor(*b->fixed) == *b->fixed, "hyperparams.batch_size",
                "must be a fixed positive integer");

    const bool learns = runner != Runner::map_elites && population_size > 0;
    if (learns) {
        require(train_steps >= 1, "population.train_steps", "must be >= 1 when a population is trained");
        require(truncation_fraction + top_fraction + injection_fraction <= 1.0 + 1e-12, "population.truncation_fraction",
                "truncation + top + injection fractions exceed 1");
        require(truncation_fraction < 1.0 - top_fraction + 1e-12, "population.truncation_fraction",
                "must be below 1 - top_fraction");
        const double P = population_size;
        const auto top = std::ceil(top_fraction * P - 1e-9);
        const auto bottom = std::floor(truncation_fraction * P + 1e-9);
        require(bottom == 0 || top >= 1, "population.top_fraction", "top band is empty but truncation needs donors");
        require(top + bottom + std::floor(injection_fraction * P + 1e-9) <= P, "population.injection_fraction",
                "bands do not fit in the population");
    }
    switch (runner) {
        case Runner::pbt_me:
            require(population_size > 0 || offspring > 0, "variation.offspring",
                    "must be >= 1 when the population is empty");
            break;
        case Runner::map_elites:
            require(offspring >= 1, "variation.offspring", "must be >= 1 for map-elites");
            break;
        case Runner::pbt:
            require(population_size >= 1, "population.size", "must be >= 1 for pbt");
            require(injection_fraction == 0.0, "population.injection_fraction", "must be 0 for pbt");
            break;
    }
}

} // namespace pbtme
