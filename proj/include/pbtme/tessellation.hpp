#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pbtme/env/environment.hpp"

namespace pbtme {

/// Cell centers of a centroidal Voronoi tessellation of a box. Immutable once built.
class CentroidSet {
public:
    CentroidSet() = default;
    CentroidSet(std::vector<double> flat, std::size_t dim, env::Box bounds);

    std::size_t size() const { return dim_ ? flat_.size() / dim_ : 0; }
    std::size_t dim() const { return dim_; }
    const env::Box& bounds() const { return bounds_; }
    std::span<const double> centroid(std::size_t i) const { return {flat_.data() + i * dim_, dim_}; }
    const std::vector<double>& flat() const { return flat_; }

    bool operator==(const CentroidSet&) const = default;

private:
    std::vector<double> flat_;
    std::size_t dim_ = 0;
    env::Box bounds_;
};

struct CvtDiagnostics {
    int iterations = 0;
    bool converged = false;
    /// Sum of squared sample-to-centroid distances after each assignment step.
    std::vector<double> quantization_error;
};

inline constexpr int cvt_max_iterations = 200;

/// The uniform sample cloud build_cvt clusters, point-major.
std::vector<double> cvt_samples(std::size_t n, const env::Box& bounds, std::uint64_t seed);

/// Lloyd's k-means on uniform samples of `bounds`, run to an assignment fixpoint
/// or `max_iterations`. Empty clusters are moved onto the sample farthest from its
/// current centroid.
CentroidSet build_cvt(std::size_t num_cells, std::size_t num_init_points, std::size_t bd_dim, const env::Box& bounds,
                      std::uint64_t seed, CvtDiagnostics* diagnostics = nullptr,
                      int max_iterations = cvt_max_iterations);

/// Nearest centroid (Euclidean, lowest index on ties) of the descriptor clipped into bounds.
std::size_t cell_index(const CentroidSet& cs, std::span<const double> descriptor);

/// One centroid per line, coordinates separated by spaces.
void write_centroids(const CentroidSet& cs, std::ostream& os);
CentroidSet read_centroids(std::istream& is, const env::Box& bounds);

} // namespace pbtme
