#pragma once

#include <span>
#include <utility>
#include <vector>

#include "pbtme/repertoire.hpp"
#include "pbtme/rl/agent.hpp"
#include "pbtme/rng.hpp"

namespace pbtme {

struct IsolineParams {
    double sigma1 = 0.005;
    double sigma2 = 0.05;

    void validate() const;
    bool operator==(const IsolineParams&) const = default;
};

/// p1 + sigma1 * eps + u * (p2 - p1), eps ~ N(0, I), u ~ N(0, sigma2^2) shared by all coordinates.
/// u is drawn first, then eps in coordinate order.
std::vector<float> isoline(std::span<const float> p1, std::span<const float> p2, const IsolineParams& params, Rng& rng);

/// Varies theta and phi of a pair as one concatenated vector; h is copied from the first parent.
rl::Agent vary_pair(const rl::Agent& first, const rl::Agent& second, const IsolineParams& params, Rng& rng);

/// One offspring per pair (parents[2i], parents[2i+1]). Each pair gets its own stream
/// seeded from `rng` before any variation, so results do not depend on evaluation order.
std::vector<rl::Agent> vary_agents(const std::vector<EliteRecord>& parents, const IsolineParams& params, Rng& rng);

} // namespace pbtme
