#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pbtme/config.hpp"
#include "pbtme/orchestrator.hpp"
#include "pbtme/repertoire.hpp"

namespace pbtme {

/// Reads an INI config. Resolution order: built-in defaults, runner defaults,
/// the named preset, keys from the file, then `overrides` ("section.key=value").
RunConfig parse_config(const std::filesystem::path& file, const std::vector<std::string>& overrides = {});
RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {});

/// Fully resolved config as INI; parse_config_text(emit_config(c)) == c.
std::string emit_config(const RunConfig& cfg);

/// Shortest text that reads back as the same double.
std::string format_double(double v);

void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const MetricRow& row);

/// Names of the exported quantities: "fitness" followed by ranged hyperparameters.
std::vector<std::string> heatmap_quantities(const Repertoire& rep);

/// One CSV per quantity (cell,centroid_x,centroid_y,value), occupied cells only.
/// Returns the written paths. Throws ConfigError for descriptor spaces that are not 2-D.
std::vector<std::filesystem::path> export_heatmaps(const Repertoire& rep, const std::filesystem::path& dir);

/// `requested` if it does not exist or is empty, otherwise the first free "<requested>-<n>".
std::filesystem::path fresh_output_dir(const std::filesystem::path& requested);

struct RunOutputs {
    std::filesystem::path dir;
    RunResult result;
};

/// Runs `cfg` writing config.ini, metrics.csv, checkpoints and the final snapshot under a fresh directory.
RunOutputs run_to_directory(const RunConfig& cfg);

} // namespace pbtme
