#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pbtme/rl/agent.hpp"
#include "pbtme/rng.hpp"
#include "pbtme/tessellation.hpp"

namespace pbtme {

struct EliteRecord {
    rl::Agent agent;
    double fitness = 0.0;
    std::vector<double> descriptor;
    std::uint64_t steps_at_insertion = 0;

    bool operator==(const EliteRecord&) const = default;
};

enum class InsertionOutcome { inserted_empty, replaced_incumbent, rejected };

struct QDMetrics {
    std::optional<double> max_fitness;  // empty when no cell is filled
    double coverage = 0.0;              // filled / total
    double qd_score = 0.0;              // sum of (fitness + offset) over filled cells
    std::size_t filled = 0;

    bool operator==(const QDMetrics&) const = default;
};

/// MAP-Elites archive: at most one elite per tessellation cell, replaced only by
/// strictly fitter candidates.
class Repertoire {
public:
    Repertoire(CentroidSet centroids, double fitness_offset);

    InsertionOutcome try_insert(EliteRecord candidate);

    /// `count` deep copies drawn uniformly with replacement over filled cells.
    std::vector<EliteRecord> sample(std::size_t count, Rng& rng) const;
    /// Same draw as sample(), returning cell indices only.
    std::vector<std::size_t> sample_cells(std::size_t count, Rng& rng) const;

    QDMetrics metrics() const;

    std::size_t num_cells() const { return cells_.size(); }
    std::size_t filled() const { return occupied_.size(); }
    bool empty() const { return occupied_.empty(); }
    const std::optional<EliteRecord>& cell(std::size_t i) const { return cells_.at(i); }
    /// Filled cell indices in order of first occupation.
    const std::vector<std::size_t>& occupied() const { return occupied_; }
    const CentroidSet& centroids() const { return centroids_; }
    double fitness_offset() const { return fitness_offset_; }
    std::size_t rejected_nonfinite() const { return rejected_nonfinite_; }

    std::uint64_t budget_consumed = 0;
    /// Free-form labels persisted with snapshots (environment name, runner, ...).
    std::map<std::string, std::string> labels;

private:
    CentroidSet centroids_;
    std::vector<std::optional<EliteRecord>> cells_;
    std::vector<std::size_t> occupied_;
    double fitness_offset_;
    std::size_t rejected_nonfinite_ = 0;
};

/// Self-describing JSON snapshot. Parameter blobs are base64 little-endian float32.
nlohmann::json snapshot(const Repertoire& rep);
/// Inverse of snapshot(); throws ParseError naming the first bad cell.
Repertoire restore(const nlohmann::json& snap);

void save_snapshot(const Repertoire& rep, const std::filesystem::path& path);
Repertoire load_snapshot(const std::filesystem::path& path);

std::string encode_floats(std::span<const float> values);
std::vector<float> decode_floats(const std::string& blob);

} // namespace pbtme
