#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gmmsom/model.h"
#include "gmmsom/topology.h"

namespace gmmsom {

/// A tied spherical mixture seen as an energy-based self-organizing map:
/// prototypes are the centroids, the shared precision root is d and the
/// neighborhood is the smoothing kernel.
class SomView {
public:
    // Throws UsageError unless the model is tied_spherical and sizes agree.
    SomView(MixtureModel& model, GridTopology topology, NeighborhoodKernel kernel);

    std::size_t prototypes() const { return model_->components(); }
    std::size_t dim() const { return model_->dim(); }
    std::span<const double> prototype(std::size_t k) const { return model_->centroids.row(k); }
    double precision_root() const { return model_->precision_roots(0, 0); }

    const MixtureModel& model() const { return *model_; }
    MixtureModel& model() { return *model_; }
    const GridTopology& topology() const { return topology_; }
    const NeighborhoodKernel& kernel() const { return kernel_; }
    void set_kernel(NeighborhoodKernel kernel);

private:
    MixtureModel* model_;
    GridTopology topology_;
    NeighborhoodKernel kernel_;
};

/// Mean over samples of min_k sum_j g_kj ||x - mu_j||^2.
double som_energy(const DataSet& data, const SomView& view);

/// Prototype minimizing the kernel-convolved squared distance; lowest index
/// on ties.
std::size_t bmu(std::span<const double> x, const SomView& view);

/// mu_k += epsilon * g_{k,bmu} (x - mu_k) for every prototype k.
void som_update(SomView& view, std::span<const double> x, double epsilon);

struct EquivalenceReport {
    double lhs = 0.0;          // smoothed max-component log-likelihood
    double rhs = 0.0;          // -log K + normalizer - d^2/2 * energy
    double energy = 0.0;       // som_energy
    double log_k_term = 0.0;   // -log K
    double normalizer = 0.0;   // D (log d - log(2 pi)/2)
    double max_abs_err = 0.0;  // max over samples and the aggregate
};

/// Checks, sample by sample, that the smoothed loss of the tied mixture
/// equals the affinely rescaled SOM energy.
EquivalenceReport verify_equivalence(const DataSet& data, const SomView& view);

}  // namespace gmmsom
