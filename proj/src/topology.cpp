#include "gmmsom/topology.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmmsom/errors.h"

namespace gmmsom {

namespace {

std::size_t exact_sqrt(std::size_t k) {
    auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(k))));
    while (r * r > k) --r;
    while ((r + 1) * (r + 1) <= k) ++r;
    return r;
}

double axis_offset(std::size_t a, std::size_t b, std::size_t extent, bool periodic) {
    const std::size_t direct = a > b ? a - b : b - a;
    const std::size_t offset = periodic ? std::min(direct, extent - direct) : direct;
    return static_cast<double>(offset);
}

}  // namespace

GridTopology::GridTopology(GridKind kind, std::size_t components, bool periodic)
    : kind_(kind), rows_(1), cols_(components), periodic_(periodic) {
    if (components == 0) throw UsageError("grid needs at least one component");
    if (kind == GridKind::Square) {
        const std::size_t side = exact_sqrt(components);
        if (side * side != components) {
            throw UsageError("2D grid requires a perfect-square component count, got " +
                             std::to_string(components));
        }
        rows_ = side;
        cols_ = side;
    }
}

GridCoord GridTopology::coord(std::size_t k) const {
    if (k >= components()) throw UsageError("grid index out of range");
    return {k / cols_, k % cols_};
}

double grid_distance_sq(const GridTopology& topology, std::size_t j, std::size_t k) {
    const GridCoord a = topology.coord(j);
    const GridCoord b = topology.coord(k);
    const double dr = axis_offset(a.row, b.row, topology.rows(), topology.periodic());
    const double dc = axis_offset(a.col, b.col, topology.cols(), topology.periodic());
    return dr * dr + dc * dc;
}

NeighborhoodKernel::NeighborhoodKernel(Matrix weights, double sigma)
    : g_(std::move(weights)), sigma_(sigma) {
    if (g_.rows() != g_.cols() || g_.rows() == 0) {
        throw UsageError("kernel must be a non-empty square matrix");
    }
    bool identity = true;
    for (std::size_t k = 0; k < g_.rows(); ++k) {
        double sum = 0.0;
        for (std::size_t j = 0; j < g_.cols(); ++j) {
            const double v = g_(k, j);
            if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("kernel entries must be finite and >= 0");
            sum += v;
            if (v != (j == k ? 1.0 : 0.0)) identity = false;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw UsageError("kernel rows must sum to one");
    }
    identity_ = identity;
}

NeighborhoodKernel NeighborhoodKernel::identity(std::size_t components) {
    NeighborhoodKernel kernel;
    kernel.g_ = Matrix(components, components);
    for (std::size_t k = 0; k < components; ++k) kernel.g_(k, k) = 1.0;
    kernel.identity_ = true;
    return kernel;
}

Matrix unnormalized_kernel(const GridTopology& topology, double sigma) {
    if (!(sigma > 0.0)) throw UsageError("kernel sigma must be positive");
    const std::size_t K = topology.components();
    Matrix g(K, K);
    const double denom = 2.0 * sigma * sigma;
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < K; ++j) {
            g(k, j) = std::exp(-grid_distance_sq(topology, j, k) / denom);
        }
    }
    return g;
}

NeighborhoodKernel build_kernel(const GridTopology& topology, double sigma) {
    if (!(sigma > 0.0)) throw UsageError("kernel sigma must be positive");
    if (sigma < kIdentityKernelSigma) {
        auto kernel = NeighborhoodKernel::identity(topology.components());
        return NeighborhoodKernel(kernel.weights(), sigma);
    }
    Matrix g = unnormalized_kernel(topology, sigma);
    for (std::size_t k = 0; k < g.rows(); ++k) {
        auto row = g.row(k);
        double sum = 0.0;
        for (double v : row) sum += v;
        for (double& v : row) v /= sum;
    }
    return NeighborhoodKernel(std::move(g), sigma);
}

double AnnealingSchedule::tau() const {
    if (convention == DecayConvention::Literal) return std::log((start - end) / (t_inf - t0));
    return std::log(start / end) / (t_inf - t0);
}

void AnnealingSchedule::validate() const {
    if (!(end > 0.0) || !(start > end) || !std::isfinite(start)) {
        throw UsageError("schedule requires start > end > 0");
    }
    if (!(t0 >= 0.0) || !(t_inf > t0) || !std::isfinite(t_inf)) {
        throw UsageError("schedule requires t_inf > t0 >= 0");
    }
}

double schedule_value(const AnnealingSchedule& s, double t) {
    if (t < s.t0) return s.start;
    if (t >= s.t_inf) return s.end;
    if (s.convention == DecayConvention::Literal) return s.start * std::exp(-s.tau() * t);
    // Clamp so rounding in exp() can never dip below the final value.
    return std::max(s.end, s.start * std::exp(-s.tau() * (t - s.t0)));
}

}  // namespace gmmsom
