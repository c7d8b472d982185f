#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pbtme/rl/agent.hpp"
#include "pbtme/rl/hyperparams.hpp"
#include "pbtme/variation.hpp"

namespace pbtme {

enum class Runner { pbt_me, map_elites, pbt };

std::string to_string(Runner r);
Runner runner_from_string(const std::string& s);

/// Fully resolved run configuration.
struct RunConfig {
    Runner runner = Runner::pbt_me;
    rl::Algo algo = rl::Algo::td3;
    std::string env = "point-maze-trap";
    std::uint64_t total_budget = 2'000'000;
    /// Stop after this many iterations even if budget remains; -1 for no cap.
    std::int64_t max_iterations = -1;
    std::uint64_t seed = 0;
    int threads = 1;

    int population_size = 80;
    double truncation_fraction = 0.2;  // bottom share replaced from the top
    double top_fraction = 0.1;         // donor share
    double injection_fraction = 0.4;   // share refilled from the repertoire
    int train_steps = 5000;            // environment (and gradient) steps per agent per iteration
    bool resample_injected_h = false;

    int offspring = 240;
    IsolineParams isoline;

    int num_cells = 1024;
    int cvt_init_points = 50000;

    std::vector<int> hidden{64, 64};
    std::size_t buffer_capacity = 100000;
    rl::HyperparamSchema schema = rl::td3_schema();

    std::filesystem::path output_dir = "runs/run";
    /// Snapshot (and heatmaps, if enabled) every this many iterations; 0 disables.
    int checkpoint_every = 0;
    bool export_heatmaps = false;
    /// Record real elapsed time in the metrics log; off keeps logs reproducible.
    bool wall_clock = false;

    rl::AgentShape agent_shape(int state_dim, int action_dim) const;

    /// Throws ConfigError naming the first offending key.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

} // namespace pbtme
