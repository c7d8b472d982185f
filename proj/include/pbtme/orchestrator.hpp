#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pbtme/config.hpp"
#include "pbtme/env/environment.hpp"
#include "pbtme/repertoire.hpp"
#include "pbtme/rl/agent.hpp"
#include "pbtme/rl/replay_buffer.hpp"
#include "pbtme/rl/rollout.hpp"

namespace pbtme {

/// A training unit: the agent plus everything that stays with the position in
/// the population when the agent is replaced (buffer, stream) or is rebuilt (optimizer).
struct Slot {
    rl::Agent agent;
    rl::ReplayBuffer buffer;
    rl::TrainState train;
    Rng rng;
    std::optional<double> last_fitness;
    std::vector<double> last_descriptor;
};

struct Population {
    std::vector<Slot> slots;

    std::size_t size() const { return slots.size(); }
};

struct PopulationFractions {
    double truncation = 0.2;  // p
    double top = 0.1;         // n
    double injection = 0.4;   // k
};

struct BandSizes {
    std::size_t top = 0;
    std::size_t bottom = 0;
    std::size_t injected = 0;
};

/// ceil(n P), floor(p P), floor(k P); throws ConfigError if they do not fit in P.
BandSizes band_sizes(std::size_t population_size, const PopulationFractions& f);

struct PopulationUpdateReport {
    std::vector<std::size_t> ranking;  // slot indices, best first
    std::vector<std::size_t> truncated;
    std::vector<std::size_t> donors;   // donors[i] was copied into truncated[i]
    std::vector<std::size_t> injected;
    std::vector<std::size_t> injected_cells;
};

/// Truncation selection plus repertoire injection. Replaced slots keep their buffer
/// and stream, get a fresh optimizer state and lose their last evaluation.
PopulationUpdateReport population_update(Population& pop, const Repertoire& rep, const PopulationFractions& f,
                                         const rl::HyperparamSchema& schema, bool resample_injected_h, Rng& rng);

struct TrainReport {
    std::uint64_t steps = 0;
    std::uint64_t nonfinite_updates = 0;
};

/// Each slot alternates one exploration step and one gradient step, S times, from a fresh episode.
TrainReport train_population(Population& pop, const env::Environment& env, int steps_per_agent, int threads);

struct EvaluationContext {
    const env::Environment* env = nullptr;
    std::uint64_t seed = 0;
    std::uint64_t iteration = 0;
    int threads = 1;
};

/// Exploitation-mode episodes, one per agent, run in parallel and returned in input order.
std::vector<rl::Evaluation> evaluate_all(const std::vector<const rl::Agent*>& agents, const EvaluationContext& ctx,
                                         std::uint64_t batch_tag);

/// Evaluates the population, records last fitness and descriptor, inserts copies in slot order.
/// Returns the number of environment steps used.
std::uint64_t insert_population(Population& pop, Repertoire& rep, const EvaluationContext& ctx,
                                std::uint64_t steps_at_insertion);

/// Samples 2M parents, varies them into M offspring, evaluates and inserts them.
std::uint64_t insert_offspring(Repertoire& rep, int offspring, const IsolineParams& iso, Rng& selection_rng,
                               Rng& variation_rng, const EvaluationContext& ctx, std::uint64_t steps_at_insertion);

struct MetricRow {
    std::uint64_t budget_steps = 0;
    QDMetrics metrics;
    double wall_seconds = 0.0;
};

struct RunHooks {
    std::function<void(const MetricRow&)> on_metrics;
    /// Called every checkpoint_every iterations with the iteration index (1-based).
    std::function<void(std::int64_t iteration, const Repertoire&)> on_checkpoint;
};

struct RunResult {
    std::vector<MetricRow> metrics;
    std::optional<Repertoire> repertoire;
    RunConfig config;
    std::int64_t iterations = 0;
    std::uint64_t budget = 0;
    /// Independent step counts read from the environments themselves.
    std::uint64_t train_env_steps = 0;
    std::uint64_t eval_env_steps = 0;
    std::uint64_t nonfinite_updates = 0;
    double wall_seconds = 0.0;
};

/// Environment steps charged by one loop iteration and by initialization.
std::uint64_t iteration_cost(const RunConfig& cfg, int episode_length);
std::uint64_t init_cost(const RunConfig& cfg, int episode_length);

RunResult run_pbt_me(const RunConfig& cfg, const RunHooks& hooks = {});
RunResult run_map_elites(const RunConfig& cfg, const RunHooks& hooks = {});
RunResult run_pbt(const RunConfig& cfg, const RunHooks& hooks = {});
/// Dispatches on cfg.runner.
RunResult run(const RunConfig& cfg, const RunHooks& hooks = {});

/// Calls fn(i) for i in [0, n) on up to `threads` threads.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace pbtme
