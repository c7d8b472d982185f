#include "pbtme/repertoire.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>

#include "pbtme/errors.hpp"

namespace pbtme {

Repertoire::Repertoire(CentroidSet centroids, double fitness_offset)
    : centroids_(std::move(centroids)), cells_(centroids_.size()), fitness_offset_(fitness_offset) {
    if (!(fitness_offset >= 0.0) || !std::isfinite(fitness_offset)) throw ConfigError("fitness_offset must be finite and >= 0");
}

InsertionOutcome Repertoire::try_insert(EliteRecord candidate) {
    if (!std::isfinite(candidate.fitness)) {
        if (rejected_nonfinite_++ == 0)
            std::clog << "repertoire: dropping candidate with non-finite fitness " << candidate.fitness << '\n';
        return InsertionOutcome::rejected;
    }
    const std::size_t c = cell_index(centroids_, candidate.descriptor);
    auto& slot = cells_[c];
    if (!slot) {
        slot = std::move(candidate);
        occupied_.push_back(c);
        return InsertionOutcome::inserted_empty;
    }
    if (candidate.fitness > slot->fitness) {
        slot = std::move(candidate);
        return InsertionOutcome::replaced_incumbent;
    }
    return InsertionOutcome::rejected;
}

std::vector<std::size_t> Repertoire::sample_cells(std::size_t count, Rng& rng) const {
    if (occupied_.empty()) throw ContractViolation("cannot sample an empty repertoire; insert the initial batch first");
    std::uniform_int_distribution<std::size_t> pick(0, occupied_.size() - 1);
    std::vector<std::size_t> out(count);
    for (auto& c : out) c = occupied_[pick(rng)];
    return out;
}

std::vector<EliteRecord> Repertoire::sample(std::size_t count, Rng& rng) const {
    std::vector<EliteRecord> out;
    out.reserve(count);
    for (std::size_t c : sample_cells(count, rng)) out.push_back(*cells_[c]);
    return out;
}

QDMetrics Repertoire::metrics() const {
    QDMetrics m;
    m.filled = occupied_.size();
    m.coverage = double(m.filled) / double(cells_.size());
    // Sum in cell order so the score does not depend on insertion history.
    for (const auto& slot : cells_) {
        if (!slot) continue;
        m.qd_score += slot->fitness + fitness_offset_;
        if (!m.max_fitness || slot->fitness > *m.max_fitness) m.max_fitness = slot->fitness;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

constexpr char b64_alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const unsigned char* data, std::size_t n) {
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    for (std::size_t i = 0; i < n; i += 3) {
        const std::uint32_t b0 = data[i];
        const std::uint32_t b1 = i + 1 < n ? data[i + 1] : 0;
        const std::uint32_t b2 = i + 2 < n ? data[i + 2] : 0;
        const std::uint32_t v = (b0 << 16) | (b1 << 8) | b2;
        out += b64_alphabet[(v >> 18) & 63];
        out += b64_alphabet[(v >> 12) & 63];
        out += i + 1 < n ? b64_alphabet[(v >> 6) & 63] : '=';
        out += i + 2 < n ? b64_alphabet[v & 63] : '=';
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& s) {
    if (s.size() % 4 != 0) throw ParseError("base64 length is not a multiple of 4");
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<unsigned char> out;
    out.reserve(s.size() / 4 * 3);
    for (std::size_t i = 0; i < s.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = s[i + k];
            if (c == '=' && i + 4 == s.size() && k >= 2) {
                v[k] = 0;
                ++pad;
            } else if (pad > 0 || (v[k] = value(c)) < 0) {
                throw ParseError("invalid base64 character");
            }
        }
        const std::uint32_t w = (std::uint32_t(v[0]) << 18) | (std::uint32_t(v[1]) << 12) | (std::uint32_t(v[2]) << 6) | v[3];
        out.push_back((w >> 16) & 0xFF);
        if (pad < 2) out.push_back((w >> 8) & 0xFF);
        if (pad < 1) out.push_back(w & 0xFF);
    }
    return out;
}

nlohmann::json shape_to_json(const rl::AgentShape& s) {
    return {{"algo", rl::to_string(s.algo)}, {"state_dim", s.state_dim}, {"action_dim", s.action_dim}, {"hidden", s.hidden}};
}

rl::AgentShape shape_from_json(const nlohmann::json& j) {
    rl::AgentShape s;
    s.algo = rl::algo_from_string(j.at("algo").get<std::string>());
    s.state_dim = j.at("state_dim").get<int>();
    s.action_dim = j.at("action_dim").get<int>();
    s.hidden = j.at("hidden").get<std::vector<int>>();
    return s;
}

} // namespace

std::string encode_floats(std::span<const float> values) {
    std::vector<unsigned char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto u = std::bit_cast<std::uint32_t>(values[i]);
        for (int k = 0; k < 4; ++k) bytes[4 * i + k] = (u >> (8 * k)) & 0xFF;
    }
    return base64_encode(bytes.data(), bytes.size());
}

std::vector<float> decode_floats(const std::string& blob) {
    const auto bytes = base64_decode(blob);
    if (bytes.size() % 4 != 0) throw ParseError("parameter blob is not a whole number of float32 values");
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k) u |= std::uint32_t(bytes[4 * i + k]) << (8 * k);
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

nlohmann::json snapshot(const Repertoire& rep) {
    using nlohmann::json;
    json j;
    j["format"] = "pbtme-repertoire";
    j["version"] = 1;
    j["fitness_offset"] = rep.fitness_offset();
    j["budget_consumed"] = rep.budget_consumed;
    j["labels"] = rep.labels;
    const auto& cs = rep.centroids();
    j["bounds"] = {{"low", cs.bounds().low}, {"high", cs.bounds().high}};
    json centroids = json::array();
    for (std::size_t i = 0; i < cs.size(); ++i) {
        auto c = cs.centroid(i);
        centroids.push_back(std::vector<double>(c.begin(), c.end()));
    }
    j["centroids"] = std::move(centroids);

    json cells = json::array();
    bool shape_written = false;
    for (std::size_t i = 0; i < rep.num_cells(); ++i) {
        const auto& slot = rep.cell(i);
        if (!slot) continue;
        const auto& a = slot->agent;
        if (!shape_written) {
            j["agent_shape"] = shape_to_json(a.shape);
            json layout = json::array();
            for (const auto& p : rl::phi_layout(a.shape)) layout.push_back({{"name", p.name}, {"size", p.size}});
            j["phi_layout"] = std::move(layout);
            shape_written = true;
        }
        std::vector<float> phi_flat;
        for (const auto& p : a.phi) phi_flat.insert(phi_flat.end(), p.begin(), p.end());
        cells.push_back({{"index", i},
                         {"fitness", slot->fitness},
                         {"descriptor", slot->descriptor},
                         {"steps_at_insertion", slot->steps_at_insertion},
                         {"hyperparams", a.h},
                         {"theta_blob", encode_floats(a.theta)},
                         {"phi_blob", encode_floats(phi_flat)}});
    }
    j["cells"] = std::move(cells);
    return j;
}

Repertoire restore(const nlohmann::json& j) {
    std::vector<double> flat;
    env::Box bounds;
    double offset = 0.0;
    try {
        if (j.value("format", "") != "pbtme-repertoire") throw ParseError("not a repertoire snapshot");
        bounds.low = j.at("bounds").at("low").get<std::vector<double>>();
        bounds.high = j.at("bounds").at("high").get<std::vector<double>>();
        for (const auto& c : j.at("centroids")) {
            auto p = c.get<std::vector<double>>();
            if (p.size() != bounds.dim()) throw ParseError("centroid dimension does not match bounds");
            flat.insert(flat.end(), p.begin(), p.end());
        }
        offset = j.at("fitness_offset").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("snapshot header: ") + e.what());
    }
    Repertoire rep(CentroidSet(std::move(flat), bounds.dim(), bounds), offset);
    rep.budget_consumed = j.value("budget_consumed", std::uint64_t(0));
    if (j.contains("labels")) rep.labels = j.at("labels").get<std::map<std::string, std::string>>();

    const auto& cells = j.at("cells");
    if (cells.empty()) return rep;
    rl::AgentShape shape;
    try {
        shape = shape_from_json(j.at("agent_shape"));
    } catch (const std::exception& e) {
        throw ParseError(std::string("snapshot agent_shape: ") + e.what());
    }
    const auto layout = rl::phi_layout(shape);
    std::size_t phi_total = 0;
    for (const auto& p : layout) phi_total += p.size;
    const std::size_t theta_size = shape.actor().param_count();

    for (const auto& c : cells) {
        const long long index = c.value("index", -1LL);
        try {
            EliteRecord r;
            r.fitness = c.at("fitness").get<double>();
            r.descriptor = c.at("descriptor").get<std::vector<double>>();
            r.steps_at_insertion = c.value("steps_at_insertion", std::uint64_t(0));
            r.agent.shape = shape;
            r.agent.h = c.at("hyperparams").get<rl::Hyperparams>();
            r.agent.theta = decode_floats(c.at("theta_blob").get<std::string>());
            if (r.agent.theta.size() != theta_size) throw ParseError("theta_blob has the wrong length");
            const auto phi_flat = decode_floats(c.at("phi_blob").get<std::string>());
            if (!phi_flat.empty()) {
                if (phi_flat.size() != phi_total) throw ParseError("phi_blob has the wrong length");
                std::size_t at = 0;
                for (const auto& p : layout) {
                    r.agent.phi.emplace_back(phi_flat.begin() + at, phi_flat.begin() + at + p.size);
                    at += p.size;
                }
            }
            if (index < 0 || std::size_t(index) >= rep.num_cells()) throw ParseError("cell index out of range");
            if (cell_index(rep.centroids(), r.descriptor) != std::size_t(index))
                throw ParseError("descriptor does not map to the stored cell");
            if (rep.cell(index)) throw ParseError("duplicate cell");
            if (rep.try_insert(std::move(r)) != InsertionOutcome::inserted_empty) throw ParseError("record was not insertable");
        } catch (const ParseError& e) {
            throw ParseError("snapshot cell " + std::to_string(index) + ": " + e.what());
        } catch (const std::exception& e) {
            throw ParseError("snapshot cell " + std::to_string(index) + ": " + e.what());
        }
    }
    return rep;
}

void save_snapshot(const Repertoire& rep, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write snapshot " + path.string());
    os << snapshot(rep).dump() << '\n';
}

Repertoire load_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open snapshot " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("snapshot " + path.string() + ": " + e.what());
    }
    return restore(j);
}

} // namespace pbtme
