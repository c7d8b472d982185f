#include "pbtme/tessellation.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "pbtme/errors.hpp"

namespace pbtme {

CentroidSet::CentroidSet(std::vector<double> flat, std::size_t dim, env::Box bounds)
    : flat_(std::move(flat)), dim_(dim), bounds_(std::move(bounds)) {
    if (dim_ == 0 || flat_.size() % dim_ != 0) throw ContractViolation("centroid data is not a whole number of points");
    if (bounds_.dim() != dim_) throw ContractViolation("centroid dimension does not match bounds");
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double t = a[k] - b[k];
        s += t * t;
    }
    return s;
}

std::size_t nearest(const std::vector<double>& centroids, std::size_t K, const double* p, std::size_t d, double* best_out) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < K; ++c) {
        const double dist = sq_dist(centroids.data() + c * d, p, d);
        if (dist < best_d) {
            best_d = dist;
            best = c;
        }
    }
    if (best_out) *best_out = best_d;
    return best;
}

} // namespace

std::vector<double> cvt_samples(std::size_t n, const env::Box& bounds, std::uint64_t seed) {
    const std::size_t d = bounds.dim();
    Rng rng(seed);
    std::vector<double> samples(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            std::uniform_real_distribution<double> u(bounds.low[k], bounds.high[k]);
            samples[i * d + k] = u(rng);
        }
    return samples;
}

CentroidSet build_cvt(std::size_t num_cells, std::size_t num_init_points, std::size_t bd_dim, const env::Box& bounds,
                      std::uint64_t seed, CvtDiagnostics* diagnostics, int max_iterations) {
    if (num_cells == 0) throw ConfigError("num_cells must be positive");
    if (bd_dim == 0 || bounds.dim() != bd_dim) throw ConfigError("bounds must have bd_dim dimensions");
    for (std::size_t k = 0; k < bd_dim; ++k)
        if (!(bounds.high[k] > bounds.low[k])) throw ConfigError("descriptor bounds are degenerate in dimension " + std::to_string(k));
    if (num_init_points < num_cells)
        throw ConfigError("cvt_init_points (" + std::to_string(num_init_points) + ") must be >= num_cells (" +
                          std::to_string(num_cells) + ")");

    const std::size_t N = num_init_points, K = num_cells, d = bd_dim;
    const std::vector<double> samples = cvt_samples(N, bounds, seed);

    std::vector<double> centroids(samples.begin(), samples.begin() + K * d);
    std::vector<std::size_t> assign(N, K), previous;
    std::vector<double> dist(N);
    std::vector<double> sums(K * d);
    std::vector<std::size_t> counts(K);
    CvtDiagnostics diag;

    for (int it = 0; it < max_iterations; ++it) {
        previous = assign;
        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            assign[i] = nearest(centroids, K, samples.data() + i * d, d, &dist[i]);
            err += dist[i];
        }
        diag.quantization_error.push_back(err);
        diag.iterations = it + 1;
        if (assign == previous) {
            diag.converged = true;
            break;
        }

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < N; ++i) {
            ++counts[assign[i]];
            for (std::size_t k = 0; k < d; ++k) sums[assign[i] * d + k] += samples[i * d + k];
        }
        std::vector<std::size_t> by_distance;  // built lazily, only when a cluster is empty
        std::size_t next_far = 0;
        for (std::size_t c = 0; c < K; ++c) {
            if (counts[c] > 0) {
                for (std::size_t k = 0; k < d; ++k) centroids[c * d + k] = sums[c * d + k] / double(counts[c]);
                continue;
            }
            if (by_distance.empty()) {
                by_distance.resize(N);
                for (std::size_t i = 0; i < N; ++i) by_distance[i] = i;
                std::stable_sort(by_distance.begin(), by_distance.end(),
                                 [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
            }
            const std::size_t s = by_distance[next_far++];
            std::copy_n(samples.begin() + s * d, d, centroids.begin() + c * d);
        }
    }
    if (diagnostics) *diagnostics = std::move(diag);
    return CentroidSet(std::move(centroids), d, bounds);
}

std::size_t cell_index(const CentroidSet& cs, std::span<const double> descriptor) {
    if (descriptor.size() != cs.dim())
        throw ContractViolation("descriptor has " + std::to_string(descriptor.size()) + " dimensions, tessellation has " +
                                std::to_string(cs.dim()));
    const auto p = cs.bounds().clip(descriptor);
    return nearest(cs.flat(), cs.size(), p.data(), cs.dim(), nullptr);
}

void write_centroids(const CentroidSet& cs, std::ostream& os) {
    const auto old = os.precision(17);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const auto c = cs.centroid(i);
        for (std::size_t k = 0; k < c.size(); ++k) os << (k ? " " : "") << c[k];
        os << '\n';
    }
    os.precision(old);
}

CentroidSet read_centroids(std::istream& is, const env::Box& bounds) {
    std::vector<double> flat;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::vector<double> p;
        double v;
        while (ls >> v) p.push_back(v);
        if (!ls.eof() || p.size() != bounds.dim())
            throw ParseError("centroid table line " + std::to_string(line_no) + ": expected " +
                             std::to_string(bounds.dim()) + " numbers");
        if (!bounds.contains(p)) throw ParseError("centroid table line " + std::to_string(line_no) + " lies outside the bounds");
        flat.insert(flat.end(), p.begin(), p.end());
    }
    if (flat.empty()) throw ParseError("centroid table is empty");
    return CentroidSet(std::move(flat), bounds.dim(), bounds);
}

} // namespace pbtme
