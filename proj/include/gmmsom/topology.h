#pragma once

#include <cstddef>
#include <vector>

#include "gmmsom/matrix.h"

namespace gmmsom {

enum class GridKind { Line, Square };

struct GridCoord {
    std::size_t row = 0;
    std::size_t col = 0;
};

/// Arrangement of the K mixture components on a (1, K) line or a
/// (sqrt K, sqrt K) square. Linear index k maps row-major onto cells.
class GridTopology {
public:
    GridTopology(GridKind kind, std::size_t components, bool periodic = true);

    static GridTopology line(std::size_t components, bool periodic = true) {
        return {GridKind::Line, components, periodic};
    }
    static GridTopology square(std::size_t components, bool periodic = true) {
        return {GridKind::Square, components, periodic};
    }

    GridKind kind() const { return kind_; }
    std::size_t components() const { return rows_ * cols_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool periodic() const { return periodic_; }

    GridCoord coord(std::size_t k) const;
    std::size_t index(GridCoord c) const { return c.row * cols_ + c.col; }

    bool operator==(const GridTopology&) const = default;

private:
    GridKind kind_;
    std::size_t rows_;
    std::size_t cols_;
    bool periodic_;
};

/// Squared Euclidean distance between the cells of j and k. On periodic
/// grids each axis uses the shorter of the direct and the wrapped offset.
double grid_distance_sq(const GridTopology& topology, std::size_t j, std::size_t k);

/// Row-stochastic K x K smoothing matrix g. Row k holds the neighborhood
/// weights of component k.
class NeighborhoodKernel {
public:
    // Validates non-negativity and unit row sums (1e-12).
    NeighborhoodKernel(Matrix weights, double sigma);

    static NeighborhoodKernel identity(std::size_t components);

    std::size_t components() const { return g_.rows(); }
    double sigma() const { return sigma_; }
    bool is_identity() const { return identity_; }
    const Matrix& weights() const { return g_; }
    double operator()(std::size_t k, std::size_t j) const { return g_(k, j); }
    std::span<const double> row(std::size_t k) const { return g_.row(k); }

private:
    NeighborhoodKernel() = default;

    Matrix g_;
    double sigma_ = 0.0;
    bool identity_ = false;
};

/// Below this radius build_kernel returns exact Kronecker rows.
inline constexpr double kIdentityKernelSigma = 1e-6;

NeighborhoodKernel build_kernel(const GridTopology& topology, double sigma);

// Gaussian weights before row normalization.
Matrix unnormalized_kernel(const GridTopology& topology, double sigma);

enum class DecayConvention {
    // start * exp(-tau (t - t0)), tau = log(start / end) / (t_inf - t0).
    // Continuous at t0 and t_inf.
    Continuous,
    // start * exp(-tau t), tau = log((start - end) / (t_inf - t0)).
    // Kept for comparison only; generally discontinuous.
    Literal,
};

/// Piecewise schedule: constant `start` before t0, constant `end` after
/// t_inf, exponential decay in between. Drives both the neighborhood
/// radius and the learning rate.
struct AnnealingSchedule {
    double start = 1.2;
    double end = 0.01;
    double t0 = 0.0;
    double t_inf = 1.0;
    DecayConvention convention = DecayConvention::Continuous;

    double tau() const;
    // Throws UsageError unless start > end > 0 and t_inf > t0 >= 0.
    void validate() const;

    bool operator==(const AnnealingSchedule&) const = default;
};

double schedule_value(const AnnealingSchedule& schedule, double t);

inline double sigma_at(const AnnealingSchedule& schedule, double t) {
    return schedule_value(schedule, t);
}
inline double epsilon_at(const AnnealingSchedule& schedule, double t) {
    return schedule_value(schedule, t);
}

}  // namespace gmmsom
