#include "pbtme/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pbtme/errors.hpp"

namespace pbtme {

namespace pt = boost::property_tree;

std::string format_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
    std::string t = s;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream is(t);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    T out{};
    const char* end = v.data() + v.size();
    auto r = std::from_chars(v.data(), end, out);
    if (v.empty() || r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": cannot read '" + v + "' as a number");
    return out;
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string v = trim(raw);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Field {
    std::string path;  // section.key
    std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number_field(std::string path, T RunConfig::*member) {
    return {std::move(path), [member](RunConfig& c, const std::string& k, const std::string& v) {
                c.*member = parse_number<T>(k, v);
            },
            [member](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
                else return std::to_string(c.*member);
            }};
}

Field bool_field(std::string path, bool RunConfig::*member) {
    return {std::move(path), [member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_bool(k, v); },
            [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = [] {
        std::vector<Field> v;
        v.push_back({"run.runner", [](RunConfig& c, const std::string&, const std::string& s) { c.runner = runner_from_string(trim(s)); },
                     [](const RunConfig& c) { return to_string(c.runner); }});
        v.push_back({"run.algo",
                     [](RunConfig& c, const std::string& k, const std::string& s) {
                         try {
                             c.algo = rl::algo_from_string(trim(s));
                         } catch (const ConfigError& e) {
                             throw ConfigError(k + ": " + e.what());
                         }
                     },
                     [](const RunConfig& c) { return rl::to_string(c.algo); }});
        v.push_back({"run.env", [](RunConfig& c, const std::string&, const std::string& s) { c.env = trim(s); },
                     [](const RunConfig& c) { return c.env; }});
        v.push_back(number_field("run.total_budget", &RunConfig::total_budget));
        v.push_back(number_field("run.max_iterations", &RunConfig::max_iterations));
        v.push_back(number_field("run.seed", &RunConfig::seed));
        v.push_back(number_field("run.threads", &RunConfig::threads));
        v.push_back({"run.output_dir", [](RunConfig& c, const std::string&, const std::string& s) { c.output_dir = trim(s); },
                     [](const RunConfig& c) { return c.output_dir.string(); }});
        v.push_back(number_field("run.checkpoint_every", &RunConfig::checkpoint_every));
        v.push_back(bool_field("run.export_heatmaps", &RunConfig::export_heatmaps));
        v.push_back(bool_field("run.wall_clock", &RunConfig::wall_clock));

        v.push_back(number_field("population.size", &RunConfig::population_size));
        v.push_back(number_field("population.truncation_fraction", &RunConfig::truncation_fraction));
        v.push_back(number_field("population.top_fraction", &RunConfig::top_fraction));
        v.push_back(number_field("population.injection_fraction", &RunConfig::injection_fraction));
        v.push_back(number_field("population.train_steps", &RunConfig::train_steps));
        v.push_back(bool_field("population.resample_injected_h", &RunConfig::resample_injected_h));

        v.push_back(number_field("variation.offspring", &RunConfig::offspring));
        v.push_back({"variation.sigma1",
                     [](RunConfig& c, const std::string& k, const std::string& s) { c.isoline.sigma1 = parse_number<double>(k, s); },
                     [](const RunConfig& c) { return format_double(c.isoline.sigma1); }});
        v.push_back({"variation.sigma2",
                     [](RunConfig& c, const std::string& k, const std::string& s) { c.isoline.sigma2 = parse_number<double>(k, s); },
                     [](const RunConfig& c) { return format_double(c.isoline.sigma2); }});

        v.push_back(number_field("repertoire.num_cells", &RunConfig::num_cells));
        v.push_back(number_field("repertoire.cvt_init_points", &RunConfig::cvt_init_points));

        v.push_back({"network.hidden",
                     [](RunConfig& c, const std::string& k, const std::string& s) {
                         c.hidden.clear();
                         for (const auto& t : tokens(s)) c.hidden.push_back(parse_number<int>(k, t));
                     },
                     [](const RunConfig& c) {
                         std::string out;
                         for (std::size_t i = 0; i < c.hidden.size(); ++i) out += (i ? "," : "") + std::to_string(c.hidden[i]);
                         return out;
                     }});
        v.push_back(number_field("replay.capacity", &RunConfig::buffer_capacity));
        return v;
    }();
    return f;
}

const std::set<std::string> sections{"run", "population", "variation", "repertoire", "network", "replay", "hyperparams"};

void apply_runner_defaults(RunConfig& c) {
    switch (c.runner) {
        case Runner::pbt_me: break;
        case Runner::map_elites:
            c.population_size = 0;
            c.offspring = 1000;
            break;
        case Runner::pbt:
            c.truncation_fraction = 0.4;
            c.injection_fraction = 0.0;
            c.offspring = 0;
            break;
    }
}

void apply_preset(RunConfig& c, const std::string& name) {
    if (name == "none" || name.empty()) return;
    if (name == "desk") {
        c.num_cells = 256;
        c.cvt_init_points = 10000;
        if (c.runner != Runner::map_elites) c.population_size = 20;
        c.train_steps = 500;
        if (c.runner != Runner::pbt) c.offspring = 60;
        c.total_budget = 2'000'000;
        c.hidden = {64, 64};
        return;
    }
    if (name == "paper") {
        c.num_cells = 1024;
        c.cvt_init_points = 50000;
        c.total_budget = 150'000'000;
        c.hidden = {256, 256};
        return;
    }
    throw ConfigError("run.preset: unknown preset '" + name + "' (expected none, desk or paper)");
}

void apply_hyperparam(RunConfig& c, const std::string& name, const std::string& raw) {
    const std::string key = "hyperparams." + name;
    rl::HyperparamDef* def = nullptr;
    for (auto& d : c.schema.defs)
        if (d.name == name) def = &d;
    if (!def) throw ConfigError(key + ": not a " + rl::to_string(c.algo) + " hyperparameter");
    auto t = tokens(raw);
    if (t.size() == 1) {
        const double v = parse_number<double>(key, t[0]);
        *def = {name, v, v, v, rl::Scale::linear};
        return;
    }
    if (t.size() == 2 || t.size() == 3) {
        rl::Scale scale = rl::Scale::linear;
        if (t.size() == 3) {
            if (t[2] == "log") scale = rl::Scale::log;
            else if (t[2] != "linear") throw ConfigError(key + ": scale must be linear or log");
        }
        *def = {name, parse_number<double>(key, t[0]), parse_number<double>(key, t[1]), std::nullopt, scale};
        return;
    }
    throw ConfigError(key + ": expected 'value' or 'low high [linear|log]'");
}

RunConfig resolve(pt::ptree tree, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const std::string path = trim(o.substr(0, eq));
        if (eq == std::string::npos || path.find('.') == std::string::npos)
            throw ConfigError("override '" + o + "' must look like section.key=value");
        tree.put(path, trim(o.substr(eq + 1)));
    }
    for (const auto& [section, body] : tree) {
        if (!sections.count(section)) throw ConfigError(section + ": unknown section");
        if (!body.data().empty() && body.empty()) throw ConfigError(section + ": keys must live inside a section");
        if (section == "hyperparams") continue;
        for (const auto& [key, value] : body) {
            const std::string path = section + "." + key;
            if (path == "run.preset") continue;
            const bool known = std::any_of(fields().begin(), fields().end(), [&](const Field& f) { return f.path == path; });
            if (!known) throw ConfigError(path + ": unknown key");
        }
    }

    RunConfig c;
    if (auto v = tree.get_optional<std::string>("run.runner")) c.runner = runner_from_string(trim(*v));
    if (auto v = tree.get_optional<std::string>("run.algo")) {
        try {
            c.algo = rl::algo_from_string(trim(*v));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("run.algo: ") + e.what());
        }
    }
    c.schema = rl::default_schema(c.algo);
    apply_runner_defaults(c);
    apply_preset(c, trim(tree.get<std::string>("run.preset", "none")));
    for (const auto& f : fields())
        if (auto v = tree.get_optional<std::string>(f.path)) f.set(c, f.path, *v);
    if (auto hp = tree.get_child_optional("hyperparams"))
        for (const auto& [name, value] : *hp) apply_hyperparam(c, name, value.data());
    c.validate();
    return c;
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return resolve(std::move(tree), overrides);
}

RunConfig parse_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open config file " + file.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str(), overrides);
}

std::string emit_config(const RunConfig& cfg) {
    std::ostringstream os;
    std::string current;
    for (const auto& f : fields()) {
        const auto dot = f.path.find('.');
        const std::string section = f.path.substr(0, dot);
        if (section != current) {
            os << (current.empty() ? "" : "\n") << '[' << section << "]\n";
            current = section;
        }
        os << f.path.substr(dot + 1) << " = " << f.get(cfg) << '\n';
    }
    os << "\n[hyperparams]\n";
    for (const auto& d : cfg.schema.defs) {
        os << d.name << " = ";
        if (d.fixed) os << format_double(*d.fixed) << '\n';
        else os << format_double(d.low) << ' ' << format_double(d.high) << (d.scale == rl::Scale::log ? " log" : " linear") << '\n';
    }
    return os.str();
}

void write_metrics_header(std::ostream& os) { os << "budget_steps,max_fitness,coverage,qd_score,wall_seconds\n"; }

void write_metrics_row(std::ostream& os, const MetricRow& row) {
    os << row.budget_steps << ',' << (row.metrics.max_fitness ? format_double(*row.metrics.max_fitness) : "") << ','
       << format_double(row.metrics.coverage) << ',' << format_double(row.metrics.qd_score) << ','
       << format_double(row.wall_seconds) << '\n';
}

std::vector<std::string> heatmap_quantities(const Repertoire& rep) {
    std::vector<std::string> out{"fitness"};
    const EliteRecord* first = nullptr;
    if (!rep.occupied().empty()) first = &*rep.cell(rep.occupied().front());
    bool learners = false;
    rl::Algo algo = rl::Algo::td3;
    if (first) {
        learners = first->agent.has_learner();
        algo = first->agent.shape.algo;
    } else if (rep.labels.count("algo") && rep.labels.count("runner")) {
        learners = rep.labels.at("runner") != "map-elites";
        algo = rl::algo_from_string(rep.labels.at("algo"));
    }
    if (learners)
        for (const auto& name : rl::default_schema(algo).ranged_names()) out.push_back(name);
    return out;
}

std::vector<std::filesystem::path> export_heatmaps(const Repertoire& rep, const std::filesystem::path& dir) {
    if (rep.centroids().dim() != 2)
        throw ConfigError("heatmap export needs a 2-D descriptor space, this repertoire has " +
                          std::to_string(rep.centroids().dim()));
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& q : heatmap_quantities(rep)) {
        const auto path = dir / ("heatmap_" + q + ".csv");
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        os << "cell,centroid_x,centroid_y,value\n";
        for (std::size_t i = 0; i < rep.num_cells(); ++i) {
            const auto& rec = rep.cell(i);
            if (!rec) continue;
            const double value = q == "fitness" ? rec->fitness : rec->agent.hyper(q);
            const auto c = rep.centroids().centroid(i);
            os << i << ',' << format_double(c[0]) << ',' << format_double(c[1]) << ',' << format_double(value) << '\n';
        }
        written.push_back(path);
    }
    return written;
}

std::filesystem::path fresh_output_dir(const std::filesystem::path& requested) {
    namespace fs = std::filesystem;
    auto is_free = [](const fs::path& p) { return !fs::exists(p) || (fs::is_directory(p) && fs::is_empty(p)); };
    if (is_free(requested)) return requested;
    for (int n = 1;; ++n) {
        fs::path candidate = requested;
        candidate += "-" + std::to_string(n);
        if (is_free(candidate)) return candidate;
    }
}

RunOutputs run_to_directory(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    cfg.validate();
    RunOutputs out;
    out.dir = fresh_output_dir(cfg.output_dir);
    fs::create_directories(out.dir);
    {
        std::ofstream os(out.dir / "config.ini");
        os << emit_config(cfg);
    }
    std::ofstream metrics(out.dir / "metrics.csv");
    if (!metrics) throw std::runtime_error("cannot write " + (out.dir / "metrics.csv").string());
    write_metrics_header(metrics);

    RunHooks hooks;
    hooks.on_metrics = [&](const MetricRow& row) {
        write_metrics_row(metrics, row);
        metrics.flush();
    };
    hooks.on_checkpoint = [&](std::int64_t iteration, const Repertoire& rep) {
        char name[32];
        std::snprintf(name, sizeof name, "iter_%06lld", static_cast<long long>(iteration));
        fs::create_directories(out.dir / "snapshots");
        save_snapshot(rep, out.dir / "snapshots" / (std::string(name) + ".json"));
        if (cfg.export_heatmaps) export_heatmaps(rep, out.dir / "heatmaps" / name);
    };
    out.result = run(cfg, hooks);
    save_snapshot(*out.result.repertoire, out.dir / "snapshot_final.json");
    if (cfg.export_heatmaps) export_heatmaps(*out.result.repertoire, out.dir / "heatmaps" / "final");
    return out;
}

} // namespace pbtme
