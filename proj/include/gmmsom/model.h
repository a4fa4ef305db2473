#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmmsom/matrix.h"
#include "gmmsom/topology.h"

namespace gmmsom {

/// Allowed range of every precision root d_ki.
struct PrecisionBounds {
    double min = 1e-3;
    double max = 1e3;

    bool operator==(const PrecisionBounds&) const = default;
};

inline constexpr double kWeightFloor = 1e-8;

/// Diagonal Gaussian mixture parameterized by weights, centroids and
/// precision roots d (precision = d^2, variance = d^-2).
///
/// With tied_spherical set, every precision root holds the same value and
/// the weights stay at 1/K: this is the configuration that coincides with
/// an energy-based self-organizing map.
struct MixtureModel {
    std::vector<double> weights;
    Matrix centroids;
    Matrix precision_roots;
    bool tied_spherical = false;

    MixtureModel() = default;
    // Equal weights, zero centroids, all precision roots set to `d`.
    MixtureModel(std::size_t components, std::size_t dim, double d, bool tied = false);

    std::size_t components() const { return weights.size(); }
    std::size_t dim() const { return centroids.cols(); }

    // Throws UsageError if any invariant is violated.
    void validate(const PrecisionBounds& bounds = {}) const;
    bool is_finite() const;

    bool operator==(const MixtureModel&) const = default;
};

struct DataSource {
    std::string path;
    std::string format;         // "idx", "csv", "synthetic", ...
    std::string normalization;  // e.g. "bytes/255"
    std::vector<std::uint32_t> idx_dims;
    std::uint8_t idx_type = 0;
};

struct DataSet {
    Matrix samples;
    DataSource meta;

    DataSet() = default;
    explicit DataSet(Matrix s, DataSource m = {}) : samples(std::move(s)), meta(std::move(m)) {}

    std::size_t count() const { return samples.rows(); }
    std::size_t dim() const { return samples.cols(); }
    std::span<const double> operator[](std::size_t n) const { return samples.row(n); }

    // Throws InputError on empty or non-finite data.
    void validate() const;
};

struct Responsibilities {
    Matrix gamma;  // N x K, rows sum to one
};

/// log p_k(x) for the diagonal Gaussian k.
double component_log_density(std::span<const double> x, const MixtureModel& model, std::size_t k);

/// out[k] = log pi_k + log p_k(x) for every component. No validation.
void joint_log_terms(std::span<const double> x, const MixtureModel& model, std::span<double> out);

/// Mean over samples of log sum_k pi_k p_k(x_n), with a max shift.
double full_log_likelihood(const DataSet& data, const MixtureModel& model);

/// Mean over samples of max_k [log pi_k + log p_k(x_n)]. Lower bound of
/// full_log_likelihood.
double max_component_log_likelihood(const DataSet& data, const MixtureModel& model);

/// Mean over samples of max_k sum_j g_kj [log pi_j + log p_j(x_n)].
double smoothed_log_likelihood(const DataSet& data, const MixtureModel& model,
                               const NeighborhoodKernel& kernel);

Responsibilities responsibilities(const DataSet& data, const MixtureModel& model);

struct Winner {
    std::size_t index = 0;
    double value = 0.0;
};

/// argmax_k of the kernel-smoothed terms; ties go to the lowest index.
Winner smoothed_winner(std::span<const double> terms, const NeighborhoodKernel& kernel);

/// argmax over a span, lowest index on ties.
Winner argmax(std::span<const double> values);

/// log sum exp(values) with a max shift.
double log_sum_exp(std::span<const double> values);

}  // namespace gmmsom
