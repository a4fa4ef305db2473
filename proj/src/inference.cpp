#include "gmmsom/inference.h"

#include <algorithm>
#include <cmath>

#include "gmmsom/errors.h"

namespace gmmsom {

namespace {

void check_sample(std::span<const double> x, const MixtureModel& model) {
    if (x.size() != model.dim()) throw UsageError("sample dimension does not match model");
}

}  // namespace

double outlier_score(std::span<const double> x, const MixtureModel& model) {
    check_sample(x, model);
    std::vector<double> terms(model.components());
    joint_log_terms(x, model, terms);
    return argmax(terms).value;
}

std::size_t assign_cluster(std::span<const double> x, const MixtureModel& model) {
    check_sample(x, model);
    std::vector<double> terms(model.components());
    joint_log_terms(x, model, terms);
    return argmax(terms).index;
}

Matrix sample(const MixtureModel& model, std::size_t n, Rng& rng) {
    if (n == 0) throw UsageError("sample count must be >= 1");
    const std::size_t K = model.components();
    const std::size_t D = model.dim();
    Matrix out(n, D);
    std::uniform_int_distribution<std::size_t> uniform(0, K - 1);
    std::discrete_distribution<std::size_t> by_weight(model.weights.begin(), model.weights.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t k = model.tied_spherical ? uniform(rng) : by_weight(rng);
        auto row = out.row(s);
        for (std::size_t i = 0; i < D; ++i) {
            row[i] = model.centroids(k, i) + normal(rng) / model.precision_roots(k, i);
        }
    }
    return out;
}

OutlierReport score_batch(const DataSet& data, const MixtureModel& model, std::size_t window,
                          const DataSet* reference, double percentile) {
    if (window == 0) throw UsageError("window must be >= 1");
    if (data.count() == 0) throw InputError("empty dataset");
    OutlierReport report;
    report.window = window;
    report.scores.reserve(data.count());
    for (std::size_t n = 0; n < data.count(); ++n) report.scores.push_back(outlier_score(data[n], model));

    report.window_means.resize(data.count());
    for (std::size_t n = 0; n < data.count(); ++n) {
        const std::size_t first = n + 1 >= window ? n + 1 - window : 0;
        double sum = 0.0;
        for (std::size_t m = first; m <= n; ++m) sum += report.scores[m];
        report.window_means[n] = sum / static_cast<double>(n + 1 - first);
    }

    if (reference) {
        if (!(percentile >= 0.0 && percentile <= 100.0)) throw UsageError("percentile must be in [0, 100]");
        if (reference->count() == 0) throw InputError("empty reference batch");
        std::vector<double> ref;
        ref.reserve(reference->count());
        for (std::size_t n = 0; n < reference->count(); ++n) ref.push_back(outlier_score((*reference)[n], model));
        std::sort(ref.begin(), ref.end());
        // Linear interpolation between order statistics.
        const double pos = percentile / 100.0 * static_cast<double>(ref.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, ref.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        report.threshold = ref[lo] + frac * (ref[hi] - ref[lo]);
        report.outlier.resize(data.count());
        for (std::size_t n = 0; n < data.count(); ++n) {
            report.outlier[n] = report.window_means[n] < *report.threshold;
        }
    }
    return report;
}

}  // namespace gmmsom
