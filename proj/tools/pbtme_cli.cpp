#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pbtme/errors.hpp"
#include "pbtme/io.hpp"
#include "pbtme/rl/rollout.hpp"

using namespace pbtme;

namespace {

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides) {
    const RunConfig cfg = parse_config(config_path, overrides);
    const auto out = run_to_directory(cfg);
    const auto& r = out.result;
    const auto m = r.repertoire->metrics();
    std::cout << "output " << out.dir.string() << "\n"
              << "iterations " << r.iterations << " budget " << r.budget << " coverage " << format_double(m.coverage)
              << " qd_score " << format_double(m.qd_score) << " max_fitness "
              << (m.max_fitness ? format_double(*m.max_fitness) : "none") << "\n";
    return 0;
}

int cmd_export(const std::string& snapshot_path, const std::string& out_dir) {
    const Repertoire rep = load_snapshot(snapshot_path);
    std::filesystem::path dir = out_dir;
    if (dir.empty()) dir = std::filesystem::path(snapshot_path).parent_path() / (std::filesystem::path(snapshot_path).stem().string() + "_heatmaps");
    for (const auto& p : export_heatmaps(rep, dir)) std::cout << p.string() << "\n";
    return 0;
}

int cmd_eval(const std::string& snapshot_path, std::size_t cell) {
    const Repertoire rep = load_snapshot(snapshot_path);
    if (cell >= rep.num_cells()) throw ContractViolation("cell " + std::to_string(cell) + " is out of range");
    const auto& rec = rep.cell(cell);
    if (!rec) throw ContractViolation("cell " + std::to_string(cell) + " is empty");
    auto it = rep.labels.find("env");
    if (it == rep.labels.end()) throw ParseError("snapshot does not name its environment");
    const auto env = env::make_environment(it->second);
    Rng rng(0);
    const auto e = rl::evaluate(rec->agent, *env, rng);
    const bool match = e.fitness == rec->fitness && e.descriptor == rec->descriptor;
    std::cout << "fitness " << format_double(e.fitness) << " descriptor";
    for (double d : e.descriptor) std::cout << ' ' << format_double(d);
    std::cout << "\nstored fitness " << format_double(rec->fitness) << " descriptor";
    for (double d : rec->descriptor) std::cout << ' ' << format_double(d);
    std::cout << "\n" << (match ? "match" : "MISMATCH") << "\n";
    return match ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quality-diversity search over populations of RL agents"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    auto* run = app.add_subcommand("run", "Run the configured algorithm");
    run->add_option("config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    run->add_option("--set", overrides, "Override a key, e.g. --set population.size=10");

    std::string snapshot_path, out_dir;
    auto* exp = app.add_subcommand("export-heatmap", "Write per-cell CSV tables from a snapshot");
    exp->add_option("snapshot", snapshot_path, "Snapshot JSON")->required()->check(CLI::ExistingFile);
    exp->add_option("--out", out_dir, "Output directory");

    std::size_t cell = 0;
    auto* ev = app.add_subcommand("eval", "Re-evaluate a stored agent");
    ev->add_option("snapshot", snapshot_path, "Snapshot JSON")->required()->check(CLI::ExistingFile);
    ev->add_option("--cell", cell, "Cell index")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config_path, overrides);
        if (*exp) return cmd_export(snapshot_path, out_dir);
        if (*ev) return cmd_eval(snapshot_path, cell);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 3;
    } catch (const ContractViolation& e) {
        std::cerr << "invalid request: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
