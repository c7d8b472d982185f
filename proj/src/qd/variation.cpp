#include "pbtme/variation.hpp"

#include <cmath>
#include <random>

#include "pbtme/errors.hpp"

namespace pbtme {

void IsolineParams::validate() const {
    if (!std::isfinite(sigma1) || sigma1 < 0.0) throw ConfigError("isoline sigma1 must be finite and >= 0");
    if (!std::isfinite(sigma2) || sigma2 < 0.0) throw ConfigError("isoline sigma2 must be finite and >= 0");
}

namespace {

// Writes the child of (p1, p2) into out, continuing the same gaussian stream.
void isoline_into(std::span<const float> p1, std::span<const float> p2, double sigma1, double u,
                  std::normal_distribution<double>& normal, Rng& rng, float* out) {
    for (std::size_t i = 0; i < p1.size(); ++i) {
        const double eps = normal(rng);
        const double delta = sigma1 * eps + u * (double(p2[i]) - double(p1[i]));
        out[i] = delta == 0.0 ? p1[i] : float(double(p1[i]) + delta);
    }
}

} // namespace

std::vector<float> isoline(std::span<const float> p1, std::span<const float> p2, const IsolineParams& params, Rng& rng) {
    if (p1.size() != p2.size()) throw ContractViolation("isoline parents have different lengths");
    std::normal_distribution<double> normal(0.0, 1.0);
    const double u = params.sigma2 * normal(rng);
    std::vector<float> out(p1.size());
    isoline_into(p1, p2, params.sigma1, u, normal, rng, out.data());
    return out;
}

rl::Agent vary_pair(const rl::Agent& first, const rl::Agent& second, const IsolineParams& params, Rng& rng) {
    if (!rl::structurally_compatible(first, second)) throw ContractViolation("isoline parents are not structurally compatible");
    std::normal_distribution<double> normal(0.0, 1.0);
    const double u = params.sigma2 * normal(rng);
    rl::Agent child;
    child.shape = first.shape;
    child.h = first.h;
    child.theta.resize(first.theta.size());
    isoline_into(first.theta, second.theta, params.sigma1, u, normal, rng, child.theta.data());
    child.phi.resize(first.phi.size());
    for (std::size_t c = 0; c < first.phi.size(); ++c) {
        child.phi[c].resize(first.phi[c].size());
        isoline_into(first.phi[c], second.phi[c], params.sigma1, u, normal, rng, child.phi[c].data());
    }
    return child;
}

std::vector<rl::Agent> vary_agents(const std::vector<EliteRecord>& parents, const IsolineParams& params, Rng& rng) {
    if (parents.size() % 2 != 0) throw ContractViolation("vary_agents needs an even number of parents");
    const std::size_t pairs = parents.size() / 2;
    std::vector<std::uint64_t> seeds(pairs);
    for (auto& s : seeds) s = rng();
    std::vector<rl::Agent> out;
    out.reserve(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        Rng pair_rng(seeds[i]);
        out.push_back(vary_pair(parents[2 * i].agent, parents[2 * i + 1].agent, params, pair_rng));
    }
    return out;
}

} // namespace pbtme
