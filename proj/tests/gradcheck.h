// Finite-difference check of the analytic loss gradients against the
// long-double loss oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gmmsom/trainer.h"
#include "oracles.h"

namespace gradcheck {

struct Result {
    std::size_t checked = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
    double worst_excess = 0.0;  // max of |analytic - fd| / allowed
    std::string first_failure;
};

inline constexpr long double kStep = 1e-5L;

// Winners of every sample under kernel g; empty g means the exact loss.
inline std::vector<std::size_t> winners(const gmmsom::DataSet& data, const oracle::Params& p,
                                        const std::vector<std::vector<long double>>& g) {
    std::vector<std::size_t> w;
    if (g.empty()) return w;
    for (std::size_t n = 0; n < data.count(); ++n) w.push_back(oracle::smoothed_sample(oracle::row(data, n), p, g).winner);
    return w;
}

inline long double loss(const gmmsom::DataSet& data, const oracle::Params& p,
                        const std::vector<std::vector<long double>>& g) {
    return g.empty() ? oracle::full_ll(data, p) : oracle::smoothed_ll(data, p, g);
}

// Compares one analytic partial with the central difference of the loss in
// the given parameter slot, skipping slots where any argmax moves.
inline void compare(Result& r, const gmmsom::DataSet& data, oracle::Params& p,
                    const std::vector<std::vector<long double>>& g, long double& slot, double analytic,
                    const std::string& label) {
    if (!g.empty()) {
        const auto base = winners(data, p, g);
        const long double saved = slot;
        slot = saved + kStep;
        const auto up = winners(data, p, g);
        slot = saved - kStep;
        const auto down = winners(data, p, g);
        slot = saved;
        if (up != base || down != base) {
            ++r.skipped;
            return;
        }
    }
    const long double fd = oracle::central_difference([&] { return loss(data, p, g); }, slot, kStep);
    const double allowed = std::max(1e-4 * std::abs(static_cast<double>(fd)), 1e-7);
    const double err = std::abs(analytic - static_cast<double>(fd));
    ++r.checked;
    r.worst_excess = std::max(r.worst_excess, err / allowed);
    if (err > allowed) {
        if (r.failed == 0) {
            r.first_failure = label + ": analytic " + std::to_string(analytic) + " fd " +
                              std::to_string(static_cast<double>(fd));
        }
        ++r.failed;
    }
}

// kernel == nullptr checks grad_exact against the full log-likelihood;
// otherwise grad_smoothed against the smoothed loss with that kernel.
inline Result check(const gmmsom::DataSet& data, const gmmsom::MixtureModel& model,
                    const gmmsom::NeighborhoodKernel* kernel) {
    const gmmsom::Gradients grad =
        kernel ? gmmsom::grad_smoothed(data, model, *kernel) : gmmsom::grad_exact(data, model);
    const auto g = kernel ? oracle::kernel_of(*kernel) : std::vector<std::vector<long double>>{};
    oracle::Params p = oracle::from_model(model);
    Result r;
    for (std::size_t k = 0; k < model.components(); ++k) {
        for (std::size_t i = 0; i < model.dim(); ++i) {
            compare(r, data, p, g, p.mu[k][i], grad.mu(k, i), "mu[" + std::to_string(k) + "][" + std::to_string(i) + "]");
            compare(r, data, p, g, p.d[k][i], grad.precision(k, i), "d[" + std::to_string(k) + "][" + std::to_string(i) + "]");
        }
        compare(r, data, p, g, p.weights[k], grad.weights[k], "pi[" + std::to_string(k) + "]");
    }
    return r;
}

inline void merge(Result& into, const Result& r) {
    into.checked += r.checked;
    into.skipped += r.skipped;
    if (into.failed == 0 && r.failed > 0) into.first_failure = r.first_failure;
    into.failed += r.failed;
    into.worst_excess = std::max(into.worst_excess, r.worst_excess);
}

}  // namespace gradcheck
