#pragma once

// Finite-difference checks of the actor-critic losses on tiny networks, shared by
// the unit tests and the acceptance suite. Everything runs in double precision.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pbtme/rl/agent.hpp"
#include "pbtme/rl/losses.hpp"

namespace gradcheck {

using namespace pbtme;
using Mat = nn::Matrix<double>;
using Vec = std::vector<double>;

// Step and floor: ReLU kinks inside the step are unlikely at 1e-6, and the floor
// keeps round-off on near-zero coordinates from counting as relative error.
inline constexpr double step = 1e-6;
inline constexpr double abs_floor = 1e-4;

inline double rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), abs_floor});
}

/// Worst relative error of `grad` against central differences of `f` around `x`.
inline double check(Vec x, const Vec& grad, const std::function<double(const Vec&)>& f) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + step;
        const double fp = f(x);
        x[i] = keep - step;
        const double fm = f(x);
        x[i] = keep;
        worst = std::max(worst, rel_error(grad[i], (fp - fm) / (2 * step)));
    }
    return worst;
}

struct Probe {
    rl::AgentShape td3{rl::Algo::td3, 1, 1, {4}};
    rl::AgentShape sac{rl::Algo::sac, 1, 1, {4}};
    Vec td3_theta, sac_theta, c1, c2, tc1, tc2;
    rl::Batch<double> batch;
    Mat xi, eps, eps_next;
    double gamma, policy_noise, noise_clip, reward_scale, log_alpha;
};

inline Vec random_params(const nn::MlpSpec& spec, Rng& rng) {
    // Wider than the default initialization so that the tanh output and the
    // clipping in the targets are exercised.
    const auto p = nn::init_params(spec, rng);
    Vec out(p.begin(), p.end());
    for (auto& v : out) v *= 2.0;
    return out;
}

inline Probe make_probe(Rng& rng, int batch = 4) {
    Probe p;
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    p.td3_theta = random_params(p.td3.actor(), rng);
    p.sac_theta = random_params(p.sac.actor(), rng);
    p.c1 = random_params(p.td3.critic(), rng);
    p.c2 = random_params(p.td3.critic(), rng);
    p.tc1 = random_params(p.td3.critic(), rng);
    p.tc2 = random_params(p.td3.critic(), rng);
    auto fill = [&](Mat& m, int rows, auto gen) {
        m.resize(rows, batch);
        for (auto& v : m.reshaped()) v = gen();
    };
    fill(p.batch.state, 1, [&] { return n01(rng); });
    fill(p.batch.action, 1, [&] { return 2 * u01(rng) - 1; });
    fill(p.batch.reward, 1, [&] { return n01(rng); });
    fill(p.batch.next_state, 1, [&] { return n01(rng); });
    fill(p.batch.done, 1, [&] { return u01(rng) < 0.25 ? 1.0 : 0.0; });
    fill(p.xi, 1, [&] { return n01(rng); });
    fill(p.eps, 1, [&] { return n01(rng); });
    fill(p.eps_next, 1, [&] { return n01(rng); });
    p.gamma = 0.9 + 0.1 * u01(rng);
    p.policy_noise = u01(rng);
    p.noise_clip = u01(rng);
    p.reward_scale = 0.1 + 9.9 * u01(rng);
    p.log_alpha = std::log(0.05 + u01(rng));
    return p;
}

/// Worst relative error per loss gradient for one probe.
inline std::map<std::string, double> check_probe(const Probe& p) {
    using namespace rl::loss;
    std::map<std::string, double> worst;
    const auto ta = p.td3.actor(), sa = p.sac.actor(), cr = p.td3.critic();
    const std::span<double> none;

    {
        Vec g1(cr.param_count(), 0.0), g2(cr.param_count(), 0.0);
        td3_critic<double>(ta, cr, p.td3_theta, p.c1, p.c2, p.tc1, p.tc2, p.batch, p.xi, p.gamma, p.policy_noise,
                           p.noise_clip, g1, g2);
        worst["td3 critic (critic 1)"] = check(p.c1, g1, [&](const Vec& c) {
            return td3_critic<double>(ta, cr, p.td3_theta, c, p.c2, p.tc1, p.tc2, p.batch, p.xi, p.gamma,
                                      p.policy_noise, p.noise_clip, none, none);
        });
        worst["td3 critic (critic 2)"] = check(p.c2, g2, [&](const Vec& c) {
            return td3_critic<double>(ta, cr, p.td3_theta, p.c1, c, p.tc1, p.tc2, p.batch, p.xi, p.gamma,
                                      p.policy_noise, p.noise_clip, none, none);
        });
    }
    {
        Vec g(ta.param_count(), 0.0);
        td3_actor<double>(ta, cr, p.td3_theta, p.c1, p.batch.state, g);
        worst["td3 actor"] = check(p.td3_theta, g, [&](const Vec& th) {
            return td3_actor<double>(ta, cr, th, p.c1, p.batch.state, none);
        });
    }
    {
        Vec g1(cr.param_count(), 0.0), g2(cr.param_count(), 0.0);
        sac_critic<double>(sa, cr, p.sac_theta, p.c1, p.c2, p.tc1, p.tc2, p.log_alpha, p.batch, p.eps_next, p.gamma,
                           p.reward_scale, g1, g2);
        worst["sac critic (critic 1)"] = check(p.c1, g1, [&](const Vec& c) {
            return sac_critic<double>(sa, cr, p.sac_theta, c, p.c2, p.tc1, p.tc2, p.log_alpha, p.batch, p.eps_next,
                                      p.gamma, p.reward_scale, none, none);
        });
        worst["sac critic (critic 2)"] = check(p.c2, g2, [&](const Vec& c) {
            return sac_critic<double>(sa, cr, p.sac_theta, p.c1, c, p.tc1, p.tc2, p.log_alpha, p.batch, p.eps_next,
                                      p.gamma, p.reward_scale, none, none);
        });
    }
    Mat log_prob;
    {
        Vec g(sa.param_count(), 0.0);
        sac_actor<double>(sa, cr, p.sac_theta, p.c1, p.c2, p.log_alpha, p.batch.state, p.eps, g, &log_prob);
        worst["sac actor"] = check(p.sac_theta, g, [&](const Vec& th) {
            return sac_actor<double>(sa, cr, th, p.c1, p.c2, p.log_alpha, p.batch.state, p.eps, none);
        });
    }
    {
        double g = 0.0;
        sac_alpha<double>(p.log_alpha, log_prob, -1.0, &g);
        worst["sac temperature"] = check({p.log_alpha}, {g}, [&](const Vec& la) {
            return sac_alpha<double>(la[0], log_prob, -1.0, nullptr);
        });
    }
    return worst;
}

/// |P(a <= x) by quadrature of the squashed density - P(a <= x) from the normal cdf|,
/// worst over a grid of x, plus |total mass - 1|.
inline double squashed_density_error(double mean, double sd) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    boost::math::normal_distribution<double> normal(mean, sd);
    auto density = [&](double a) { return std::exp(rl::loss::squashed_gaussian_log_density(mean, sd, a)); };
    double worst = std::abs(integrator.integrate(density, -1.0, 1.0) - 1.0);
    for (double x = -0.95; x <= 0.951; x += 0.1) {
        const double numeric = integrator.integrate(density, -1.0, x);
        worst = std::max(worst, std::abs(numeric - boost::math::cdf(normal, std::atanh(x))));
    }
    return worst;
}

} // namespace gradcheck
