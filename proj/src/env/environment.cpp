#include "pbtme/env/environment.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "pbtme/env/planar_arm.hpp"
#include "pbtme/env/point_maze.hpp"
#include "pbtme/errors.hpp"

namespace pbtme::env {

bool Box::contains(std::span<const double> p) const {
    if (p.size() != dim()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] < low[i] || p[i] > high[i]) return false;
    return true;
}

std::vector<double> Box::clip(std::span<const double> p) const {
    if (p.size() != dim()) throw ContractViolation("point dimension does not match box");
    std::vector<double> out(p.begin(), p.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], low[i], high[i]);
    return out;
}

StepResult Environment::step(const State& s, std::span<const float> action) const {
    if (action.size() != std::size_t(spec_.action_dim))
        throw ContractViolation("action has " + std::to_string(action.size()) + " components, env expects " +
                                std::to_string(spec_.action_dim));
    std::vector<double> a(action.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(double(action[i]), -1.0, 1.0);
    steps_.fetch_add(1, std::memory_order_relaxed);
    return transition(s, a);
}

std::vector<double> Environment::descriptor(const Trajectory& traj) const {
    if (traj.length() != std::size_t(spec_.episode_length) || traj.states.size() != traj.length() + 1)
        throw ContractViolation("descriptor needs a full-length trajectory");
    return spec_.bd_bounds.clip(final_state_descriptor(traj.states.back()));
}

std::unique_ptr<Environment> make_environment(const std::string& name) {
    if (name == "point-maze-trap") return std::make_unique<PointMazeTrap>();
    if (name == "planar-arm") return std::make_unique<PlanarArm>();
    throw ConfigError("unknown environment '" + name + "'");
}

std::vector<std::string> environment_names() { return {"point-maze-trap", "planar-arm"}; }

void write_trajectory_log(const Trajectory& traj, std::ostream& os) {
    const auto old_precision = os.precision(17);
    for (std::size_t t = 0; t < traj.length(); ++t) {
        os << t;
        for (double v : traj.states[t]) os << ' ' << v;
        for (float v : traj.actions[t]) os << ' ' << double(v);
        os << ' ' << traj.rewards[t] << '\n';
    }
    os.precision(old_precision);
}

std::vector<LoggedStep> read_trajectory_log(std::istream& is, int state_dim, int action_dim) {
    std::vector<LoggedStep> steps;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        LoggedStep st;
        st.state.resize(state_dim);
        st.action.resize(action_dim);
        ls >> st.step;
        for (auto& v : st.state) ls >> v;
        for (auto& v : st.action) {
            double d;
            ls >> d;
            v = float(d);
        }
        ls >> st.reward;
        if (!ls || st.step != steps.size())
            throw ParseError("trajectory log: malformed line for step " + std::to_string(steps.size()));
        steps.push_back(std::move(st));
    }
    return steps;
}

Trajectory replay(const Environment& env, const std::vector<std::vector<float>>& actions, Rng& rng) {
    Trajectory traj;
    traj.states.push_back(env.reset(rng));
    for (const auto& a : actions) {
        auto r = env.step(traj.states.back(), a);
        traj.actions.push_back(a);
        traj.rewards.push_back(r.reward);
        traj.states.push_back(std::move(r.next));
    }
    return traj;
}

} // namespace pbtme::env
