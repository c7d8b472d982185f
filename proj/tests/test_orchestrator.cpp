#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "pbtme/errors.hpp"
#include "pbtme/orchestrator.hpp"
#include "pbtme/tessellation.hpp"

using namespace pbtme;

namespace {

RunConfig tiny(Runner runner) {
    RunConfig c;
    c.runner = runner;
    c.num_cells = 32;
    c.cvt_init_points = 500;
    c.population_size = 5;
    c.train_steps = 60;
    c.offspring = runner == Runner::pbt ? 0 : 8;
    c.hidden = {8};
    c.buffer_capacity = 1000;
    c.schema.at("batch_size").fixed = 16;
    c.schema.at("batch_size").low = c.schema.at("batch_size").high = 16;
    c.max_iterations = 3;
    c.seed = 11;
    if (runner == Runner::pbt) {
        c.truncation_fraction = 0.4;
        c.injection_fraction = 0.0;
    }
    if (runner == Runner::map_elites) c.population_size = 0;
    return c;
}

const rl::AgentShape shape{rl::Algo::td3, 4, 2, {4}};

/// P slots with distinct parameters and fitness equal to minus the slot index
/// (ties where `tied` is set), plus a repertoire of distinct compatible agents.
struct Fixture {
    Population pop;
    Repertoire rep;

    Fixture(std::size_t P, std::uint64_t seed, bool tied = false)
        : rep(build_cvt(16, 400, 2, env::Box{{0.0, 0.0}, {1.0, 1.0}}, 1), 0.0) {
        Rng rng(seed);
        const auto schema = rl::td3_schema();
        for (std::size_t i = 0; i < P; ++i) {
            Rng a = make_stream(seed, {1, i}), b = make_stream(seed, {2, i});
            auto agent = rl::make_agent(shape, a, b, rl::sample_hyperparams(schema, rng));
            auto train = rl::make_train_state(agent);
            pop.slots.push_back({std::move(agent), rl::ReplayBuffer(10, 4, 2), std::move(train),
                                 make_stream(seed, {3, i}), tied ? 1.0 : -double(i), {0.5, 0.5}});
        }
        for (std::size_t c = 0; c < 16; ++c) {
            Rng a = make_stream(seed, {4, c}), b = make_stream(seed, {5, c});
            auto agent = rl::make_agent(shape, a, b, rl::sample_hyperparams(schema, rng));
            const auto cen = rep.centroids().centroid(c);
            rep.try_insert({std::move(agent), double(c), std::vector<double>(cen.begin(), cen.end()), 0});
        }
    }
};

} // namespace

TEST_CASE("band sizes") {
    auto b = band_sizes(80, {0.2, 0.1, 0.4});
    CHECK(b.bottom == 16);
    CHECK(b.top == 8);
    CHECK(b.injected == 32);
    b = band_sizes(80, {0.4, 0.1, 0.0});
    CHECK(b.bottom == 32);
    b = band_sizes(20, {0.2, 0.1, 0.4});
    CHECK(b.bottom == 4);
    CHECK(b.top == 2);
    CHECK(b.injected == 8);
    CHECK_THROWS_AS(band_sizes(10, {0.6, 0.1, 0.4}), ConfigError);
    CHECK_THROWS_AS(band_sizes(10, {-0.1, 0.1, 0.0}), ConfigError);
}

TEST_CASE("population_update contract") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Fixture fx(20, seed);
        const Population before = fx.pop;
        Rng rng(seed);
        const auto rep = population_update(fx.pop, fx.rep, {0.2, 0.1, 0.4}, rl::td3_schema(), false, rng);
        REQUIRE(rep.truncated.size() == 4);
        REQUIRE(rep.injected.size() == 8);
        // Ranking follows fitness, so slot i has rank i here.
        for (std::size_t i = 0; i < 20; ++i) CHECK(rep.ranking[i] == i);
        std::set<std::size_t> touched;
        for (std::size_t j = 0; j < 4; ++j) {
            const auto t = rep.truncated[j], d = rep.donors[j];
            CHECK(t >= 16);
            CHECK(d < 2);
            CHECK(fx.pop.slots[t].agent.theta == before.slots[d].agent.theta);
            CHECK(fx.pop.slots[t].agent.phi == before.slots[d].agent.phi);
            CHECK(rl::conforms(rl::td3_schema(), fx.pop.slots[t].agent.h));
            CHECK_FALSE(fx.pop.slots[t].last_fitness.has_value());
            CHECK(fx.pop.slots[t].buffer.size() == before.slots[t].buffer.size());
            touched.insert(t);
        }
        for (std::size_t j = 0; j < 8; ++j) {
            const auto s = rep.injected[j];
            CHECK(s >= 2);
            CHECK(s < 16);
            CHECK(fx.pop.slots[s].agent == fx.rep.cell(rep.injected_cells[j])->agent);
            touched.insert(s);
        }
        CHECK(touched.size() == 12);
        for (std::size_t i = 0; i < 20; ++i) {
            if (touched.count(i)) continue;
            CHECK(fx.pop.slots[i].agent == before.slots[i].agent);
            CHECK(fx.pop.slots[i].last_fitness == before.slots[i].last_fitness);
        }
    }
}

TEST_CASE("population_update ties rank by slot index and degenerate fractions change nothing") {
    Fixture fx(10, 3, true);
    const Population before = fx.pop;
    Rng rng(1);
    const auto r = population_update(fx.pop, fx.rep, {0.0, 0.1, 0.0}, rl::td3_schema(), false, rng);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(r.ranking[i] == i);
        CHECK(fx.pop.slots[i].agent == before.slots[i].agent);
    }
    CHECK(r.truncated.empty());
    CHECK(r.injected.empty());
}

TEST_CASE("population_update switches and preconditions") {
    Fixture fx(20, 4);
    Rng rng(2);
    const auto r = population_update(fx.pop, fx.rep, {0.2, 0.1, 0.4}, rl::td3_schema(), true, rng);
    int differs = 0;
    for (std::size_t j = 0; j < r.injected.size(); ++j) {
        const auto& s = fx.pop.slots[r.injected[j]].agent;
        const auto& src = fx.rep.cell(r.injected_cells[j])->agent;
        CHECK(s.theta == src.theta);
        differs += s.h != src.h;
    }
    CHECK(differs == int(r.injected.size()));

    Fixture unevaluated(10, 5);
    unevaluated.pop.slots[3].last_fitness.reset();
    CHECK_THROWS_AS(population_update(unevaluated.pop, unevaluated.rep, {0.2, 0.1, 0.4}, rl::td3_schema(), false, rng),
                    ContractViolation);
}

TEST_CASE("train_population accounting") {
    auto env = env::make_environment("point-maze-trap");
    const auto& spec = env->spec();
    rl::AgentShape s{rl::Algo::td3, spec.state_dim, spec.action_dim, {8}};
    auto schema = rl::td3_schema();
    schema.at("policy_lr") = {"policy_lr", 0.0, 0.0, 0.0};
    schema.at("critic_lr") = {"critic_lr", 0.0, 0.0, 0.0};
    schema.at("batch_size") = {"batch_size", 4, 4, 4};
    Population pop;
    Rng rng(1);
    for (std::uint64_t i = 0; i < 3; ++i) {
        Rng a(i), b(i + 10);
        auto agent = rl::make_agent(s, a, b, rl::sample_hyperparams(schema, rng));
        auto train = rl::make_train_state(agent);
        pop.slots.push_back({agent, rl::ReplayBuffer(1000, s.state_dim, s.action_dim), train, Rng(i), {}, {}});
    }
    const Population before = pop;
    auto r = train_population(pop, *env, 1, 1);
    CHECK(r.steps == 3);
    CHECK(env->steps_taken() == 3);
    r = train_population(pop, *env, 137, 2);
    CHECK(r.steps == 3 * 137);
    CHECK(env->steps_taken() == 3 + 3 * 137);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(pop.slots[i].buffer.size() == 138);
        CHECK(pop.slots[i].agent.theta == before.slots[i].agent.theta);
        // Critics are untouched; targets move only towards identical sources.
        CHECK(pop.slots[i].agent.phi == before.slots[i].agent.phi);
    }
    CHECK_THROWS_AS(train_population(pop, *env, 0, 1), ContractViolation);
}

TEST_CASE("iteration costs") {
    RunConfig c;
    CHECK(iteration_cost(c, 100) == 80 * 5000 + 320 * 100);
    CHECK(init_cost(c, 100) == 320 * 100);
    c.offspring = 0;
    CHECK(iteration_cost(c, 100) == 80 * 5000 + 80 * 100);
    c.runner = Runner::map_elites;
    c.offspring = 1000;
    CHECK(iteration_cost(c, 100) == 100000);
    c.runner = Runner::pbt;
    c.population_size = 80;
    CHECK(iteration_cost(c, 100) == 400000);
    CHECK(init_cost(c, 100) == 0);
}

TEST_CASE("budget equals the environment step counters") {
    for (auto runner : {Runner::pbt_me, Runner::map_elites, Runner::pbt}) {
        CAPTURE(to_string(runner));
        const auto cfg = tiny(runner);
        const auto r = run(cfg);
        const auto T = std::uint64_t(env::make_environment(cfg.env)->spec().episode_length);
        CHECK(r.iterations == 3);
        REQUIRE(r.metrics.size() == 4);
        for (std::size_t i = 1; i < r.metrics.size(); ++i) CHECK(r.metrics[i].budget_steps > r.metrics[i - 1].budget_steps);
        const std::uint64_t P = cfg.population_size, S = cfg.train_steps, M = cfg.offspring;
        switch (runner) {
            case Runner::pbt_me:
                CHECK(r.budget == r.train_env_steps + r.eval_env_steps);
                CHECK(r.budget == (P + M) * T + 3 * (P * S + (P + M) * T));
                break;
            case Runner::map_elites:
                CHECK(r.train_env_steps == 0);
                CHECK(r.budget == r.eval_env_steps);
                CHECK(r.budget == 4 * M * T);
                break;
            case Runner::pbt:
                CHECK(r.budget == r.train_env_steps);
                CHECK(r.budget == 3 * P * S);
                CHECK(r.eval_env_steps == 4 * P * T);
                CHECK(r.repertoire->filled() <= P * 4);
                break;
        }
        CHECK(r.budget <= cfg.total_budget);
        CHECK(r.metrics.back().budget_steps == r.budget);
    }
}

TEST_CASE("budget cap stops before overshooting") {
    auto cfg = tiny(Runner::pbt_me);
    cfg.max_iterations = -1;
    const std::uint64_t T = 100;
    const auto init = init_cost(cfg, int(T)), step = iteration_cost(cfg, int(T));
    cfg.total_budget = init + 2 * step + step / 2;
    const auto r = run(cfg);
    CHECK(r.iterations == 2);
    CHECK(r.budget == init + 2 * step);

    cfg.total_budget = 0;
    const auto z = run(cfg);
    CHECK(z.iterations == 0);
    CHECK(z.metrics.size() == 1);
}

TEST_CASE("metric series is monotone over a run") {
    const auto r = run(tiny(Runner::pbt_me));
    for (std::size_t i = 1; i < r.metrics.size(); ++i) {
        CHECK(r.metrics[i].metrics.coverage >= r.metrics[i - 1].metrics.coverage);
        CHECK(r.metrics[i].metrics.qd_score >= r.metrics[i - 1].metrics.qd_score);
        CHECK(*r.metrics[i].metrics.max_fitness >= *r.metrics[i - 1].metrics.max_fitness);
    }
}

TEST_CASE("one iteration gives one post-init row; zero iterations keep the init batch") {
    auto cfg = tiny(Runner::pbt_me);
    cfg.max_iterations = 1;
    CHECK(run(cfg).metrics.size() == 2);

    auto me = tiny(Runner::map_elites);
    me.max_iterations = 0;
    const auto r = run(me);
    CHECK(r.metrics.size() == 1);
    CHECK(r.budget == std::uint64_t(me.offspring) * 100);
    CHECK(r.repertoire->filled() >= 1);
    CHECK(r.repertoire->filled() <= std::size_t(me.offspring));
    for (auto c : r.repertoire->occupied()) CHECK(r.repertoire->cell(c)->steps_at_insertion == r.budget);
}

TEST_CASE("MAP-Elites equals the degenerate PBT-MAP-Elites configuration") {
    auto me = tiny(Runner::map_elites);
    me.max_iterations = 4;
    auto pm = me;
    pm.runner = Runner::pbt_me;
    pm.population_size = 0;
    pm.injection_fraction = 0.0;
    const auto a = run(me), b = run(pm);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
        CHECK(a.metrics[i].budget_steps == b.metrics[i].budget_steps);
        CHECK(a.metrics[i].metrics == b.metrics[i].metrics);
    }
    for (std::size_t c = 0; c < std::size_t(me.num_cells); ++c) {
        const auto& x = a.repertoire->cell(c);
        const auto& y = b.repertoire->cell(c);
        REQUIRE(x.has_value() == y.has_value());
        if (!x) continue;
        CHECK(x->agent.theta == y->agent.theta);
        CHECK(x->fitness == y->fitness);
        CHECK(x->descriptor == y->descriptor);
        CHECK(x->steps_at_insertion == y->steps_at_insertion);
    }
}

TEST_CASE("runs are deterministic with and without worker threads") {
    for (auto runner : {Runner::pbt_me, Runner::pbt}) {
        auto cfg = tiny(runner);
        cfg.max_iterations = 2;
        const auto a = run(cfg);
        cfg.threads = 3;
        const auto b = run(cfg);
        REQUIRE(a.metrics.size() == b.metrics.size());
        for (std::size_t i = 0; i < a.metrics.size(); ++i) CHECK(a.metrics[i].metrics == b.metrics[i].metrics);
        CHECK(snapshot(*a.repertoire) == snapshot(*b.repertoire));
        cfg.seed += 1;
        CHECK_FALSE(snapshot(*run(cfg).repertoire) == snapshot(*a.repertoire));
    }
}

TEST_CASE("checkpoint hook cadence") {
    auto cfg = tiny(Runner::map_elites);
    cfg.max_iterations = 7;
    cfg.checkpoint_every = 2;
    std::vector<std::int64_t> seen;
    int rows = 0;
    RunHooks hooks{[&](const MetricRow&) { ++rows; }, [&](std::int64_t it, const Repertoire&) { seen.push_back(it); }};
    run(cfg, hooks);
    CHECK(seen == std::vector<std::int64_t>{2, 4, 6});
    CHECK(rows == 8);
}

TEST_CASE("run rejects invalid configs before doing work") {
    auto cfg = tiny(Runner::pbt_me);
    cfg.truncation_fraction = 0.95;
    CHECK_THROWS_AS(run(cfg), ConfigError);
    cfg = tiny(Runner::pbt_me);
    CHECK_THROWS_AS(run_map_elites(cfg), ConfigError);
    cfg.env = "no-such-env";
    CHECK_THROWS_AS(run(cfg), ConfigError);
}

TEST_CASE("parallel_for propagates failures") {
    std::vector<int> hit(50, 0);
    parallel_for(50, 4, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(50, 4, [](std::size_t i) { if (i == 17) throw ContractViolation("boom"); }),
                    ContractViolation);
}
