#include "gmmsom/model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmmsom/errors.h"

namespace gmmsom {

namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // 0.5 * log(2 pi)

void check_compatible(const DataSet& data, const MixtureModel& model) {
    if (data.count() == 0) throw InputError("empty dataset");
    if (data.dim() != model.dim()) {
        throw UsageError("data dimension " + std::to_string(data.dim()) +
                         " does not match model dimension " + std::to_string(model.dim()));
    }
}

}  // namespace

MixtureModel::MixtureModel(std::size_t components, std::size_t dim, double d, bool tied)
    : weights(components, 1.0 / static_cast<double>(components)),
      centroids(components, dim),
      precision_roots(components, dim, d),
      tied_spherical(tied) {
    if (components == 0 || dim == 0) throw UsageError("model needs K >= 1 and D >= 1");
}

void MixtureModel::validate(const PrecisionBounds& bounds) const {
    const std::size_t K = components();
    if (K == 0) throw UsageError("model has no components");
    if (centroids.rows() != K || precision_roots.rows() != K || precision_roots.cols() != dim()) {
        throw UsageError("model parameter shapes disagree");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw UsageError("negative or NaN weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw UsageError("weights do not sum to one");
    for (double c : centroids.values()) {
        if (!std::isfinite(c)) throw UsageError("non-finite centroid");
    }
    for (double d : precision_roots.values()) {
        if (!(d >= bounds.min && d <= bounds.max)) throw UsageError("precision root out of bounds");
    }
    if (tied_spherical) {
        const double d0 = precision_roots.values().front();
        for (double d : precision_roots.values()) {
            if (d != d0) throw UsageError("tied model has unequal precision roots");
        }
        for (double w : weights) {
            if (std::abs(w - 1.0 / static_cast<double>(K)) > 1e-15) {
                throw UsageError("tied model weights must be 1/K");
            }
        }
    }
}

bool MixtureModel::is_finite() const {
    auto finite = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return finite(weights) && finite(centroids.values()) && finite(precision_roots.values());
}

void DataSet::validate() const {
    if (count() == 0 || dim() == 0) throw InputError("dataset must have N >= 1 and D >= 1");
    for (std::size_t n = 0; n < count(); ++n) {
        for (double v : samples.row(n)) {
            if (!std::isfinite(v)) throw InputError("non-finite value in sample " + std::to_string(n));
        }
    }
}

double component_log_density(std::span<const double> x, const MixtureModel& model, std::size_t k) {
    if (k >= model.components()) throw UsageError("component index out of range");
    if (x.size() != model.dim()) throw UsageError("sample dimension mismatch");
    for (double v : x) {
        if (!std::isfinite(v)) throw InputError("non-finite sample");
    }
    const auto mu = model.centroids.row(k);
    const auto d = model.precision_roots.row(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = x[i] - mu[i];
        acc += std::log(d[i]) - kHalfLogTwoPi - 0.5 * d[i] * d[i] * r * r;
    }
    return acc;
}

void joint_log_terms(std::span<const double> x, const MixtureModel& model, std::span<double> out) {
    const std::size_t D = model.dim();
    for (std::size_t k = 0; k < model.components(); ++k) {
        const auto mu = model.centroids.row(k);
        const auto d = model.precision_roots.row(k);
        double acc = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double r = x[i] - mu[i];
            acc += std::log(d[i]) - kHalfLogTwoPi - 0.5 * d[i] * d[i] * r * r;
        }
        out[k] = std::log(model.weights[k]) + acc;
    }
}

Winner argmax(std::span<const double> values) {
    Winner best{0, values[0]};
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > best.value) best = {k, values[k]};
    }
    return best;
}

double log_sum_exp(std::span<const double> values) {
    const double m = argmax(values).value;
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - m);
    return m + std::log(sum);
}

Winner smoothed_winner(std::span<const double> terms, const NeighborhoodKernel& kernel) {
    if (kernel.is_identity()) return argmax(terms);
    const std::size_t K = terms.size();
    Winner best{0, 0.0};
    for (std::size_t k = 0; k < K; ++k) {
        const auto g = kernel.row(k);
        double acc = 0.0;
        for (std::size_t j = 0; j < K; ++j) acc += g[j] * terms[j];
        if (k == 0 || acc > best.value) best = {k, acc};
    }
    return best;
}

double full_log_likelihood(const DataSet& data, const MixtureModel& model) {
    check_compatible(data, model);
    std::vector<double> terms(model.components());
    double total = 0.0;
    for (std::size_t n = 0; n < data.count(); ++n) {
        joint_log_terms(data[n], model, terms);
        total += log_sum_exp(terms);
    }
    return total / static_cast<double>(data.count());
}

double max_component_log_likelihood(const DataSet& data, const MixtureModel& model) {
    check_compatible(data, model);
    std::vector<double> terms(model.components());
    double total = 0.0;
    for (std::size_t n = 0; n < data.count(); ++n) {
        joint_log_terms(data[n], model, terms);
        total += argmax(terms).value;
    }
    return total / static_cast<double>(data.count());
}

double smoothed_log_likelihood(const DataSet& data, const MixtureModel& model,
                               const NeighborhoodKernel& kernel) {
    check_compatible(data, model);
    if (kernel.components() != model.components()) throw UsageError("kernel size does not match model");
    std::vector<double> terms(model.components());
    double total = 0.0;
    for (std::size_t n = 0; n < data.count(); ++n) {
        joint_log_terms(data[n], model, terms);
        total += smoothed_winner(terms, kernel).value;
    }
    return total / static_cast<double>(data.count());
}

Responsibilities responsibilities(const DataSet& data, const MixtureModel& model) {
    check_compatible(data, model);
    const std::size_t K = model.components();
    Responsibilities out{Matrix(data.count(), K)};
    std::vector<double> terms(K);
    for (std::size_t n = 0; n < data.count(); ++n) {
        joint_log_terms(data[n], model, terms);
        const double lse = log_sum_exp(terms);
        auto row = out.gamma.row(n);
        for (std::size_t k = 0; k < K; ++k) row[k] = std::exp(terms[k] - lse);
    }
    return out;
}

}  // namespace gmmsom
