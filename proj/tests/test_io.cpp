#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "pbtme/errors.hpp"
#include "pbtme/io.hpp"
#include "pbtme/tessellation.hpp"

using namespace pbtme;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("pbtme_io_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream is(p);
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(is, line);) {
        std::vector<std::string> row;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) row.push_back(cell);
        if (!line.empty() && line.back() == ',') row.push_back("");
        rows.push_back(row);
    }
    return rows;
}

std::string error_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const std::string small_run = R"(
[run]
preset = desk
seed = 4
max_iterations = 2
[population]
size = 4
train_steps = 100
[variation]
offspring = 8
[repertoire]
num_cells = 32
cvt_init_points = 500
[network]
hidden = 8
[hyperparams]
batch_size = 16
)";

} // namespace

TEST_CASE("empty config resolves to the PBT-MAP-Elites defaults") {
    const auto c = parse_config_text("");
    CHECK(c.runner == Runner::pbt_me);
    CHECK(c.population_size == 80);
    CHECK(c.truncation_fraction == 0.2);
    CHECK(c.top_fraction == 0.1);
    CHECK(c.injection_fraction == 0.4);
    CHECK(c.train_steps == 5000);
    CHECK(c.offspring == 240);
    CHECK(c.isoline.sigma1 == 0.005);
    CHECK(c.isoline.sigma2 == 0.05);
    CHECK(c.buffer_capacity == 100000);
    CHECK(c.num_cells == 1024);
    CHECK(c.schema == rl::td3_schema());
}

TEST_CASE("runner defaults and presets") {
    const auto me = parse_config_text("[run]\nrunner = map-elites\n");
    CHECK(me.offspring == 1000);
    CHECK(me.population_size == 0);
    const auto pbt = parse_config_text("[run]\nrunner = pbt\n");
    CHECK(pbt.truncation_fraction == 0.4);
    CHECK(pbt.injection_fraction == 0.0);
    CHECK(pbt.population_size == 80);

    const auto desk = parse_config_text("[run]\npreset = desk\n");
    CHECK(desk.num_cells == 256);
    CHECK(desk.cvt_init_points == 10000);
    CHECK(desk.population_size == 20);
    CHECK(desk.train_steps == 500);
    CHECK(desk.offspring == 60);
    CHECK(desk.total_budget == 2000000);
    CHECK(desk.hidden == std::vector<int>{64, 64});
    const auto paper = parse_config_text("[run]\npreset = paper\n");
    CHECK(paper.total_budget == 150000000);
    CHECK(paper.hidden == std::vector<int>{256, 256});

    const auto sac = parse_config_text("[run]\nalgo = sac\n");
    CHECK(sac.schema == rl::sac_schema());
}

TEST_CASE("explicit keys and overrides win") {
    const auto c = parse_config_text("[run]\npreset = desk\n[repertoire]\nnum_cells = 128\n", {"repertoire.num_cells=64"});
    CHECK(c.num_cells == 64);
    CHECK(parse_config_text("[repertoire]\nnum_cells = 256\n").num_cells == 256);
    const auto h = parse_config_text("[hyperparams]\ngamma = 0.99\nexploration_noise = 0.05 0.1\npolicy_lr = 1e-4 1e-3 log\n");
    CHECK(*h.schema.find("gamma")->fixed == 0.99);
    CHECK(h.schema.find("exploration_noise")->low == 0.05);
    CHECK(h.schema.find("policy_lr")->scale == rl::Scale::log);
}

TEST_CASE("emit and parse round-trip") {
    RunConfig c = parse_config_text(small_run);
    c.isoline.sigma1 = 0.1 + 0.2;
    c.output_dir = "somewhere/else";
    c.wall_clock = true;
    CHECK(parse_config_text(emit_config(c)) == c);
    for (auto r : {"pbt", "map-elites"}) {
        const auto d = parse_config_text(std::string("[run]\npreset = desk\nrunner = ") + r + "\n[hyperparams]\ngamma = 0.95 0.99\n");
        CHECK(parse_config_text(emit_config(d)) == d);
    }
    const auto s = parse_config_text("[run]\nalgo = sac\n");
    CHECK(parse_config_text(emit_config(s)) == s);
}

TEST_CASE("errors name the offending key") {
    CHECK(error_of("[run]\nbudget = 5\n").find("run.budget") != std::string::npos);
    CHECK(error_of("[nonsense]\na = 1\n").find("nonsense") != std::string::npos);
    CHECK(error_of("[population]\nsize = many\n").find("population.size") != std::string::npos);
    CHECK(error_of("[population]\ntruncation_fraction = 0.6\ninjection_fraction = 0.4\n").find("population.") !=
          std::string::npos);
    CHECK(error_of("[population]\ntop_fraction = 1.5\n").find("population.top_fraction") != std::string::npos);
    CHECK(error_of("[variation]\nsigma1 = -1\n").find("variation.sigma1") != std::string::npos);
    CHECK(error_of("[repertoire]\nnum_cells = 0\n").find("repertoire.num_cells") != std::string::npos);
    CHECK(error_of("[hyperparams]\nalpha_lr = 1\n").find("hyperparams.alpha_lr") != std::string::npos);
    CHECK(error_of("[hyperparams]\ngamma = 0.9 1.0 cubic\n").find("hyperparams.gamma") != std::string::npos);
    CHECK(error_of("[run]\nalgo = ppo\n").find("run.algo") != std::string::npos);
    CHECK(error_of("[run]\npreset = huge\n").find("run.preset") != std::string::npos);
    CHECK_THROWS_AS(parse_config_text("", {"no_equals_sign"}), ConfigError);
    CHECK_THROWS_AS(parse_config("/definitely/not/here.ini"), ConfigError);
}

TEST_CASE("metrics rows") {
    std::ostringstream os;
    write_metrics_header(os);
    write_metrics_row(os, {1200, {std::nullopt, 0.0, 0.0, 0}, 0.0});
    write_metrics_row(os, {2400, {-0.25, 0.5, 12.5, 3}, 1.5});
    CHECK(os.str() == "budget_steps,max_fitness,coverage,qd_score,wall_seconds\n1200,,0,0,0\n2400,-0.25,0.5,12.5,1.5\n");
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("output directories are never reused") {
    TempDir tmp;
    const auto a = tmp.path / "run";
    CHECK(fresh_output_dir(a) == a);
    fs::create_directories(a);
    CHECK(fresh_output_dir(a) == a);
    std::ofstream(a / "x") << 1;
    CHECK(fresh_output_dir(a) == tmp.path / "run-1");
    fs::create_directories(tmp.path / "run-1");
    std::ofstream(tmp.path / "run-1" / "x") << 1;
    CHECK(fresh_output_dir(a) == tmp.path / "run-2");
}

TEST_CASE("run_to_directory writes a consistent set of files") {
    TempDir tmp;
    auto cfg = parse_config_text(small_run);
    cfg.output_dir = tmp.path / "out";
    cfg.checkpoint_every = 1;
    cfg.export_heatmaps = true;
    const auto out = run_to_directory(cfg);
    CHECK(out.dir == cfg.output_dir);
    CHECK(parse_config(out.dir / "config.ini") == cfg);

    const auto rows = read_csv(out.dir / "metrics.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"budget_steps", "max_fitness", "coverage", "qd_score", "wall_seconds"});
    CHECK(std::stoull(rows[3][0]) == out.result.budget);
    CHECK(rows[3][4] == "0");

    CHECK(fs::exists(out.dir / "snapshots" / "iter_000001.json"));
    CHECK(fs::exists(out.dir / "snapshots" / "iter_000002.json"));
    const auto final_rep = load_snapshot(out.dir / "snapshot_final.json");
    CHECK(final_rep.metrics() == out.result.repertoire->metrics());
    CHECK(load_snapshot(out.dir / "snapshots" / "iter_000002.json").metrics() == final_rep.metrics());

    // Every exported value is the snapshot record's field.
    for (const auto& q : heatmap_quantities(final_rep)) {
        const auto table = read_csv(out.dir / "heatmaps" / "final" / ("heatmap_" + q + ".csv"));
        REQUIRE(table.size() == final_rep.filled() + 1);
        CHECK(table[0] == std::vector<std::string>{"cell", "centroid_x", "centroid_y", "value"});
        for (std::size_t r = 1; r < table.size(); ++r) {
            const auto cell = std::stoul(table[r][0]);
            const auto& rec = final_rep.cell(cell);
            REQUIRE(rec.has_value());
            CHECK(std::stod(table[r][1]) == final_rep.centroids().centroid(cell)[0]);
            CHECK(std::stod(table[r][2]) == final_rep.centroids().centroid(cell)[1]);
            CHECK(std::stod(table[r][3]) == (q == "fitness" ? rec->fitness : rec->agent.hyper(q)));
        }
    }

    // Same config again lands in a fresh directory with identical bytes.
    const auto again = run_to_directory(cfg);
    CHECK(again.dir == tmp.path / "out-1");
    CHECK(slurp(again.dir / "metrics.csv") == slurp(out.dir / "metrics.csv"));
    CHECK(slurp(again.dir / "snapshot_final.json") == slurp(out.dir / "snapshot_final.json"));
}

TEST_CASE("budget zero gives a single init row") {
    TempDir tmp;
    auto cfg = parse_config_text(small_run);
    cfg.output_dir = tmp.path / "zero";
    cfg.total_budget = 0;
    const auto out = run_to_directory(cfg);
    CHECK(read_csv(out.dir / "metrics.csv").size() == 2);
}

TEST_CASE("heatmap quantities and edge cases") {
    TempDir tmp;
    const env::Box unit{{0.0, 0.0}, {1.0, 1.0}};
    Repertoire empty(build_cvt(8, 100, 2, unit, 1), 0.0);
    empty.labels = {{"runner", "pbt-me"}, {"algo", "td3"}};
    const auto q = heatmap_quantities(empty);
    CHECK(q == std::vector<std::string>{"fitness", "gamma", "policy_lr", "critic_lr", "noise_clip", "policy_noise",
                                        "exploration_noise"});
    for (const auto& p : export_heatmaps(empty, tmp.path / "empty")) CHECK(slurp(p) == "cell,centroid_x,centroid_y,value\n");

    empty.labels["runner"] = "map-elites";
    CHECK(heatmap_quantities(empty) == std::vector<std::string>{"fitness"});

    const env::Box line{{0.0}, {1.0}};
    Repertoire one_d(build_cvt(4, 100, 1, line, 1), 0.0);
    CHECK_THROWS_AS(export_heatmaps(one_d, tmp.path / "oned"), ConfigError);
}
