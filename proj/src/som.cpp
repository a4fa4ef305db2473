#include "gmmsom/som.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gmmsom/errors.h"

namespace gmmsom {

namespace {

void squared_distances(std::span<const double> x, const MixtureModel& model, std::span<double> out) {
    for (std::size_t k = 0; k < model.components(); ++k) {
        const auto mu = model.centroids.row(k);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = x[i] - mu[i];
            s += r * r;
        }
        out[k] = s;
    }
}

struct Best {
    std::size_t index;
    double value;
};

Best convolved_min(std::span<const double> dist, const NeighborhoodKernel& kernel) {
    const std::size_t K = dist.size();
    if (kernel.is_identity()) {
        Best best{0, dist[0]};
        for (std::size_t k = 1; k < K; ++k) {
            if (dist[k] < best.value) best = {k, dist[k]};
        }
        return best;
    }
    Best best{0, 0.0};
    for (std::size_t k = 0; k < K; ++k) {
        const auto g = kernel.row(k);
        double acc = 0.0;
        for (std::size_t j = 0; j < K; ++j) acc += g[j] * dist[j];
        if (k == 0 || acc < best.value) best = {k, acc};
    }
    return best;
}

}  // namespace

SomView::SomView(MixtureModel& model, GridTopology topology, NeighborhoodKernel kernel)
    : model_(&model), topology_(topology), kernel_(std::move(kernel)) {
    if (!model.tied_spherical) throw UsageError("SOM view requires a tied spherical model");
    if (topology_.components() != model.components() || kernel_.components() != model.components()) {
        throw UsageError("topology, kernel and model sizes disagree");
    }
}

void SomView::set_kernel(NeighborhoodKernel kernel) {
    if (kernel.components() != model_->components()) throw UsageError("kernel size mismatch");
    kernel_ = std::move(kernel);
}

double som_energy(const DataSet& data, const SomView& view) {
    if (data.count() == 0) throw InputError("empty dataset");
    if (data.dim() != view.dim()) throw UsageError("data dimension mismatch");
    std::vector<double> dist(view.prototypes());
    double total = 0.0;
    for (std::size_t n = 0; n < data.count(); ++n) {
        squared_distances(data[n], view.model(), dist);
        total += convolved_min(dist, view.kernel()).value;
    }
    return total / static_cast<double>(data.count());
}

std::size_t bmu(std::span<const double> x, const SomView& view) {
    if (x.size() != view.dim()) throw UsageError("sample dimension mismatch");
    std::vector<double> dist(view.prototypes());
    squared_distances(x, view.model(), dist);
    return convolved_min(dist, view.kernel()).index;
}

void som_update(SomView& view, std::span<const double> x, double epsilon) {
    if (!(epsilon >= 0.0)) throw UsageError("learning rate must be non-negative");
    const std::size_t winner = bmu(x, view);
    const auto g = view.kernel().row(winner);
    Matrix& mu = view.model().centroids;
    for (std::size_t k = 0; k < view.prototypes(); ++k) {
        if (g[k] == 0.0) continue;
        auto row = mu.row(k);
        for (std::size_t i = 0; i < x.size(); ++i) row[i] += epsilon * (g[k] * (x[i] - row[i]));
    }
}

EquivalenceReport verify_equivalence(const DataSet& data, const SomView& view) {
    if (!view.model().tied_spherical) throw UsageError("equivalence needs a tied spherical model");
    if (data.count() == 0) throw InputError("empty dataset");
    if (data.dim() != view.dim()) throw UsageError("data dimension mismatch");
    const MixtureModel& model = view.model();
    const std::size_t K = model.components();
    const double d = view.precision_root();
    const double half_d2 = 0.5 * d * d;

    EquivalenceReport report;
    report.log_k_term = -std::log(static_cast<double>(K));
    report.normalizer = static_cast<double>(model.dim()) *
                        (std::log(d) - 0.5 * std::log(2.0 * std::numbers::pi));
    const double offset = report.log_k_term + report.normalizer;

    std::vector<double> terms(K);
    std::vector<double> dist(K);
    double lhs_total = 0.0;
    double energy_total = 0.0;
    for (std::size_t n = 0; n < data.count(); ++n) {
        joint_log_terms(data[n], model, terms);
        const double lhs = smoothed_winner(terms, view.kernel()).value;
        squared_distances(data[n], model, dist);
        const double e = convolved_min(dist, view.kernel()).value;
        const double rhs = offset - half_d2 * e;
        report.max_abs_err = std::max(report.max_abs_err, std::abs(lhs - rhs));
        lhs_total += lhs;
        energy_total += e;
    }
    const double N = static_cast<double>(data.count());
    report.lhs = lhs_total / N;
    report.energy = energy_total / N;
    report.rhs = offset - half_d2 * report.energy;
    report.max_abs_err = std::max(report.max_abs_err, std::abs(report.lhs - report.rhs));
    return report;
}

}  // namespace gmmsom
