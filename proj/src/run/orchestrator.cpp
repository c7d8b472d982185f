#include "pbtme/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "pbtme/errors.hpp"
#include "pbtme/rl/rollout.hpp"
#include "pbtme/rl/train.hpp"
#include "pbtme/tessellation.hpp"

namespace pbtme {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(n, std::size_t(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

BandSizes band_sizes(std::size_t P, const PopulationFractions& f) {
    for (double v : {f.truncation, f.top, f.injection})
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("population fractions must lie in [0, 1]");
    if (f.truncation + f.top + f.injection > 1.0 + 1e-12)
        throw ConfigError("population fractions add up to more than 1 (truncation + top + injection)");
    BandSizes b;
    // The small slack keeps products such as 0.1 * 80 from rounding the wrong way.
    b.top = std::size_t(std::ceil(f.top * double(P) - 1e-9));
    b.bottom = std::size_t(std::floor(f.truncation * double(P) + 1e-9));
    b.injected = std::size_t(std::floor(f.injection * double(P) + 1e-9));
    if (b.top + b.bottom + b.injected > P) throw ConfigError("population bands do not fit in the population");
    if (b.bottom > 0 && b.top == 0) throw ConfigError("truncation needs a non-empty top band");
    return b;
}

PopulationUpdateReport population_update(Population& pop, const Repertoire& rep, const PopulationFractions& f,
                                         const rl::HyperparamSchema& schema, bool resample_injected_h, Rng& rng) {
    const std::size_t P = pop.size();
    const BandSizes bands = band_sizes(P, f);
    for (std::size_t i = 0; i < P; ++i)
        if (!pop.slots[i].last_fitness) throw ContractViolation("population_update needs every slot evaluated");

    PopulationUpdateReport report;
    report.ranking.resize(P);
    std::iota(report.ranking.begin(), report.ranking.end(), std::size_t(0));
    std::stable_sort(report.ranking.begin(), report.ranking.end(), [&](std::size_t a, std::size_t b) {
        return *pop.slots[a].last_fitness > *pop.slots[b].last_fitness;
    });

    if (bands.bottom > 0) {
        std::uniform_int_distribution<std::size_t> pick(0, bands.top - 1);
        for (std::size_t r = P - bands.bottom; r < P; ++r) {
            const std::size_t target = report.ranking[r];
            const std::size_t donor = report.ranking[pick(rng)];
            Slot& s = pop.slots[target];
            s.agent.theta = pop.slots[donor].agent.theta;
            s.agent.phi = pop.slots[donor].agent.phi;
            s.agent.h = rl::sample_hyperparams(schema, rng);
            s.train = rl::make_train_state(s.agent);
            s.last_fitness.reset();
            s.last_descriptor.clear();
            report.truncated.push_back(target);
            report.donors.push_back(donor);
        }
    }

    if (bands.injected > 0) {
        std::vector<std::size_t> middle(report.ranking.begin() + bands.top, report.ranking.end() - bands.bottom);
        for (std::size_t i = 0; i < bands.injected; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, middle.size() - 1);
            std::swap(middle[i], middle[pick(rng)]);
        }
        report.injected.assign(middle.begin(), middle.begin() + bands.injected);
        report.injected_cells = rep.sample_cells(bands.injected, rng);
        for (std::size_t i = 0; i < bands.injected; ++i) {
            Slot& s = pop.slots[report.injected[i]];
            const rl::Agent& source = rep.cell(report.injected_cells[i])->agent;
            if (!rl::structurally_compatible(s.agent, source))
                throw ContractViolation("repertoire record does not fit the population's agent shape");
            s.agent = source;
            if (resample_injected_h) s.agent.h = rl::sample_hyperparams(schema, rng);
            s.train = rl::make_train_state(s.agent);
            s.last_fitness.reset();
            s.last_descriptor.clear();
        }
    }
    return report;
}

TrainReport train_population(Population& pop, const env::Environment& env, int steps_per_agent, int threads) {
    if (steps_per_agent < 1) throw ContractViolation("train_population needs at least one step per agent");
    std::vector<std::uint64_t> nonfinite(pop.size(), 0);
    parallel_for(pop.size(), threads, [&](std::size_t i) {
        Slot& s = pop.slots[i];
        rl::ExperienceCollector collector(env);
        for (int t = 0; t < steps_per_agent; ++t) {
            collector.step(s.agent, s.buffer, s.rng);
            if (rl::train_step(s.agent, s.train, s.buffer, s.rng).nonfinite) ++nonfinite[i];
        }
    });
    TrainReport r;
    r.steps = std::uint64_t(pop.size()) * std::uint64_t(steps_per_agent);
    for (auto n : nonfinite) r.nonfinite_updates += n;
    return r;
}

std::vector<rl::Evaluation> evaluate_all(const std::vector<const rl::Agent*>& agents, const EvaluationContext& ctx,
                                         std::uint64_t batch_tag) {
    std::vector<rl::Evaluation> out(agents.size());
    parallel_for(agents.size(), ctx.threads, [&](std::size_t i) {
        Rng rng = make_stream(ctx.seed, {stream::evaluation, ctx.iteration, batch_tag, i});
        out[i] = rl::evaluate(*agents[i], *ctx.env, rng);
    });
    return out;
}

namespace {

constexpr std::uint64_t population_batch = 0;
constexpr std::uint64_t offspring_batch = 1;

std::uint64_t steps_of(const std::vector<rl::Evaluation>& evals) {
    std::uint64_t n = 0;
    for (const auto& e : evals) n += std::uint64_t(e.steps);
    return n;
}

} // namespace

std::uint64_t insert_population(Population& pop, Repertoire& rep, const EvaluationContext& ctx,
                                std::uint64_t steps_at_insertion) {
    std::vector<const rl::Agent*> agents;
    for (const auto& s : pop.slots) agents.push_back(&s.agent);
    const auto evals = evaluate_all(agents, ctx, population_batch);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        Slot& s = pop.slots[i];
        s.last_fitness = evals[i].fitness;
        s.last_descriptor = evals[i].descriptor;
        rep.try_insert({s.agent, evals[i].fitness, evals[i].descriptor, steps_at_insertion});
    }
    return steps_of(evals);
}

namespace {

std::uint64_t insert_agents(std::vector<rl::Agent> agents, Repertoire& rep, const EvaluationContext& ctx,
                            std::uint64_t steps_at_insertion) {
    std::vector<const rl::Agent*> ptrs;
    for (const auto& a : agents) ptrs.push_back(&a);
    const auto evals = evaluate_all(ptrs, ctx, offspring_batch);
    for (std::size_t i = 0; i < agents.size(); ++i)
        rep.try_insert({std::move(agents[i]), evals[i].fitness, evals[i].descriptor, steps_at_insertion});
    return steps_of(evals);
}

} // namespace

std::uint64_t insert_offspring(Repertoire& rep, int offspring, const IsolineParams& iso, Rng& selection_rng,
                               Rng& variation_rng, const EvaluationContext& ctx, std::uint64_t steps_at_insertion) {
    if (offspring <= 0) return 0;
    const auto parents = rep.sample(2 * std::size_t(offspring), selection_rng);
    return insert_agents(vary_agents(parents, iso, variation_rng), rep, ctx, steps_at_insertion);
}

std::uint64_t iteration_cost(const RunConfig& cfg, int T) {
    const std::uint64_t P = std::uint64_t(cfg.population_size), S = std::uint64_t(cfg.train_steps);
    const std::uint64_t M = std::uint64_t(cfg.offspring), t = std::uint64_t(T);
    switch (cfg.runner) {
        case Runner::pbt_me: return P * S + (P + M) * t;
        case Runner::map_elites: return M * t;
        case Runner::pbt: return P * S;
    }
    return 0;
}

std::uint64_t init_cost(const RunConfig& cfg, int T) {
    const std::uint64_t P = std::uint64_t(cfg.population_size), M = std::uint64_t(cfg.offspring);
    switch (cfg.runner) {
        case Runner::pbt_me: return (P + M) * std::uint64_t(T);
        case Runner::map_elites: return M * std::uint64_t(T);
        case Runner::pbt: return 0;
    }
    return 0;
}

namespace {

using Clock = std::chrono::steady_clock;

struct RunContext {
    const RunConfig& cfg;
    const RunHooks& hooks;
    std::unique_ptr<env::Environment> train_env;
    std::unique_ptr<env::Environment> eval_env;
    rl::AgentShape shape;
    Repertoire rep;
    RunResult result;
    Clock::time_point start = Clock::now();

    RunContext(const RunConfig& c, const RunHooks& h, CentroidSet cs, std::unique_ptr<env::Environment> tr,
               std::unique_ptr<env::Environment> ev)
        : cfg(c), hooks(h), train_env(std::move(tr)), eval_env(std::move(ev)),
          shape(c.agent_shape(train_env->spec().state_dim, train_env->spec().action_dim)),
          rep(std::move(cs), train_env->spec().fitness_offset) {
        result.config = c;
        rep.labels = {{"env", c.env}, {"runner", to_string(c.runner)}, {"algo", rl::to_string(c.algo)},
                      {"seed", std::to_string(c.seed)}};
    }

    int episode_length() const { return train_env->spec().episode_length; }

    EvaluationContext eval_ctx(std::uint64_t iteration) const {
        return {eval_env.get(), cfg.seed, iteration, cfg.threads};
    }

    double elapsed() const { return std::chrono::duration<double>(Clock::now() - start).count(); }

    void log_metrics() {
        rep.budget_consumed = result.budget;
        MetricRow row{result.budget, rep.metrics(), cfg.wall_clock ? elapsed() : 0.0};
        result.metrics.push_back(row);
        if (hooks.on_metrics) hooks.on_metrics(row);
    }

    bool may_continue(std::uint64_t cost) const {
        if (cfg.max_iterations >= 0 && result.iterations >= cfg.max_iterations) return false;
        return result.budget + cost <= cfg.total_budget;
    }

    void checkpoint() {
        if (cfg.checkpoint_every > 0 && result.iterations % cfg.checkpoint_every == 0 && hooks.on_checkpoint)
            hooks.on_checkpoint(result.iterations, rep);
    }

    void note_nonfinite(std::uint64_t n) {
        if (n == 0) return;
        result.nonfinite_updates += n;
        std::clog << "warning: iteration " << result.iterations << ": " << n
                  << " training updates skipped on non-finite gradients\n";
    }

    RunResult finish() {
        result.train_env_steps = train_env->steps_taken();
        result.eval_env_steps = eval_env->steps_taken();
        result.wall_seconds = elapsed();
        rep.budget_consumed = result.budget;
        result.repertoire = std::move(rep);
        return std::move(result);
    }

    Population make_population() const {
        Population pop;
        Rng h_rng = make_stream(cfg.seed, {stream::hyperparams});
        for (int i = 0; i < cfg.population_size; ++i) {
            // Every agent starts from the same parameters; only the hyperparameters differ.
            Rng theta_rng = make_stream(cfg.seed, {stream::init_params});
            Rng phi_rng = make_stream(cfg.seed, {stream::init_phi});
            auto agent = rl::make_agent(shape, theta_rng, phi_rng, rl::sample_hyperparams(cfg.schema, h_rng));
            auto train = rl::make_train_state(agent);
            pop.slots.push_back({std::move(agent),
                                 rl::ReplayBuffer(cfg.buffer_capacity, shape.state_dim, shape.action_dim),
                                 std::move(train), make_stream(cfg.seed, {stream::slot, std::uint64_t(i)}),
                                 std::nullopt,
                                 {}});
        }
        return pop;
    }

    /// M independently initialized agents; learners carry phi and sampled h.
    std::vector<rl::Agent> random_agents(bool learners) const {
        std::vector<rl::Agent> out;
        Rng h_rng = make_stream(cfg.seed, {stream::random_agent, stream::hyperparams});
        for (int i = 0; i < cfg.offspring; ++i) {
            Rng theta_rng = make_stream(cfg.seed, {stream::random_agent, std::uint64_t(i)});
            if (learners) {
                Rng phi_rng = make_stream(cfg.seed, {stream::random_agent, std::uint64_t(i), stream::init_phi});
                out.push_back(rl::make_agent(shape, theta_rng, phi_rng, rl::sample_hyperparams(cfg.schema, h_rng)));
            } else {
                out.push_back(rl::make_policy_agent(shape, theta_rng));
            }
        }
        return out;
    }

    void check_population(const Population& pop) const {
        for (const auto& s : pop.slots) rl::validate_agent(s.agent, &cfg.schema);
    }

    template <class Fn>
    void iterate(std::uint64_t cost, Fn&& body) {
        while (may_continue(cost)) {
            ++result.iterations;
            try {
                body();
            } catch (const std::exception& e) {
                throw std::runtime_error("iteration " + std::to_string(result.iterations) + ": " + e.what());
            }
            log_metrics();
            checkpoint();
        }
    }
};

RunContext make_context(const RunConfig& cfg, const RunHooks& hooks) {
    cfg.validate();
    auto train_env = env::make_environment(cfg.env);
    auto eval_env = env::make_environment(cfg.env);
    const auto& spec = train_env->spec();
    auto cs = build_cvt(std::size_t(cfg.num_cells), std::size_t(cfg.cvt_init_points), std::size_t(spec.bd_dim),
                        spec.bd_bounds, derive_seed(cfg.seed, {stream::cvt}));
    return RunContext(cfg, hooks, std::move(cs), std::move(train_env), std::move(eval_env));
}

PopulationFractions fractions(const RunConfig& cfg) {
    return {cfg.truncation_fraction, cfg.top_fraction, cfg.injection_fraction};
}

} // namespace

RunResult run_pbt_me(const RunConfig& cfg, const RunHooks& hooks) {
    if (cfg.runner != Runner::pbt_me) throw ConfigError("run_pbt_me called with runner " + to_string(cfg.runner));
    RunContext ctx = make_context(cfg, hooks);
    const int T = ctx.episode_length();
    Population pop = ctx.make_population();
    Rng selection_rng = make_stream(cfg.seed, {stream::selection});
    Rng variation_rng = make_stream(cfg.seed, {stream::variation});
    Rng population_rng = make_stream(cfg.seed, {stream::population});

    // Initialization: evaluate and insert the population, then one offspring batch.
    const std::uint64_t pop_steps = std::uint64_t(cfg.population_size) * std::uint64_t(T);
    ctx.result.budget += insert_population(pop, ctx.rep, ctx.eval_ctx(0), pop_steps);
    if (pop.size() == 0) {
        ctx.result.budget += insert_agents(ctx.random_agents(true), ctx.rep, ctx.eval_ctx(0), init_cost(cfg, T));
    } else {
        ctx.result.budget += insert_offspring(ctx.rep, cfg.offspring, cfg.isoline, selection_rng, variation_rng,
                                              ctx.eval_ctx(0), init_cost(cfg, T));
    }
    ctx.log_metrics();

    ctx.iterate(iteration_cost(cfg, T), [&] {
        const std::uint64_t it = std::uint64_t(ctx.result.iterations);
        if (pop.size() > 0) {
            population_update(pop, ctx.rep, fractions(cfg), cfg.schema, cfg.resample_injected_h, population_rng);
            ctx.check_population(pop);
            const auto tr = train_population(pop, *ctx.train_env, cfg.train_steps, cfg.threads);
            ctx.result.budget += tr.steps;
            ctx.note_nonfinite(tr.nonfinite_updates);
        }
        const std::uint64_t before = ctx.result.budget;
        ctx.result.budget += insert_population(pop, ctx.rep, ctx.eval_ctx(it), before + pop_steps);
        ctx.result.budget += insert_offspring(ctx.rep, cfg.offspring, cfg.isoline, selection_rng, variation_rng,
                                              ctx.eval_ctx(it), before + init_cost(cfg, T));
    });
    return ctx.finish();
}

RunResult run_map_elites(const RunConfig& cfg, const RunHooks& hooks) {
    if (cfg.runner != Runner::map_elites) throw ConfigError("run_map_elites called with runner " + to_string(cfg.runner));
    RunContext ctx = make_context(cfg, hooks);
    const int T = ctx.episode_length();
    Rng selection_rng = make_stream(cfg.seed, {stream::selection});
    Rng variation_rng = make_stream(cfg.seed, {stream::variation});

    ctx.result.budget += insert_agents(ctx.random_agents(false), ctx.rep, ctx.eval_ctx(0), init_cost(cfg, T));
    ctx.log_metrics();

    ctx.iterate(iteration_cost(cfg, T), [&] {
        const std::uint64_t it = std::uint64_t(ctx.result.iterations);
        ctx.result.budget += insert_offspring(ctx.rep, cfg.offspring, cfg.isoline, selection_rng, variation_rng,
                                              ctx.eval_ctx(it), ctx.result.budget + iteration_cost(cfg, T));
    });
    return ctx.finish();
}

RunResult run_pbt(const RunConfig& cfg, const RunHooks& hooks) {
    if (cfg.runner != Runner::pbt) throw ConfigError("run_pbt called with runner " + to_string(cfg.runner));
    RunContext ctx = make_context(cfg, hooks);
    Population pop = ctx.make_population();
    Rng population_rng = make_stream(cfg.seed, {stream::population});

    // The repertoire only observes the population; its evaluations are not charged.
    insert_population(pop, ctx.rep, ctx.eval_ctx(0), 0);
    ctx.log_metrics();

    ctx.iterate(iteration_cost(cfg, ctx.episode_length()), [&] {
        const std::uint64_t it = std::uint64_t(ctx.result.iterations);
        population_update(pop, ctx.rep, fractions(cfg), cfg.schema, cfg.resample_injected_h, population_rng);
        ctx.check_population(pop);
        const auto tr = train_population(pop, *ctx.train_env, cfg.train_steps, cfg.threads);
        ctx.result.budget += tr.steps;
        ctx.note_nonfinite(tr.nonfinite_updates);
        insert_population(pop, ctx.rep, ctx.eval_ctx(it), ctx.result.budget);
    });
    return ctx.finish();
}

RunResult run(const RunConfig& cfg, const RunHooks& hooks) {
    switch (cfg.runner) {
        case Runner::pbt_me: return run_pbt_me(cfg, hooks);
        case Runner::map_elites: return run_map_elites(cfg, hooks);
        case Runner::pbt: return run_pbt(cfg, hooks);
    }
    throw ConfigError("unknown runner");
}

} // namespace pbtme
