#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gmmsom/matrix.h"
#include "gmmsom/model.h"
#include "gmmsom/trainer.h"

namespace gmmsom {

/// Single-sample max-component log-likelihood, in nats. Higher means more
/// typical of the model.
double outlier_score(std::span<const double> x, const MixtureModel& model);

/// Component with the largest log pi_k + log p_k(x); lowest index on ties.
std::size_t assign_cluster(std::span<const double> x, const MixtureModel& model);

/// Draws n samples: a component (uniform for tied models, by weight
/// otherwise), then each coordinate from N(mu_ki, 1 / d_ki^2).
Matrix sample(const MixtureModel& model, std::size_t n, Rng& rng);

struct OutlierReport {
    std::vector<double> scores;
    std::vector<double> window_means;  // trailing window ending at each sample
    std::size_t window = 10;
    std::optional<double> threshold;   // percentile of the reference scores
    std::vector<bool> outlier;         // window mean below threshold
};

/// Scores every sample and averages over a trailing window. When a
/// reference batch is supplied, the `percentile`-th percentile of its scores
/// becomes the outlier threshold.
OutlierReport score_batch(const DataSet& data, const MixtureModel& model, std::size_t window = 10,
                          const DataSet* reference = nullptr, double percentile = 1.0);

}  // namespace gmmsom
