#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "gmmsom/errors.h"
#include "gmmsom/matrix.h"
#include "gmmsom/model.h"
#include "gmmsom/topology.h"

namespace gmmsom {

using Rng = std::mt19937_64;

enum class LossRegime { Exact, MaxComponent, Smoothed };
enum class BatchSampling { WithReplacement, EpochPermutation };
enum class CentroidInit { SmallRandom, DataMean };

struct InitSpec {
    CentroidInit centroids = CentroidInit::SmallRandom;
    double centroid_scale = 0.01;  // uniform in [-scale, scale]
    double precision_sq = 5.0;     // initial d^2

    bool operator==(const InitSpec&) const = default;
};

struct CollapseThresholds {
    double degenerate_distance = 1e-3;  // relative to the data scale
    double uniform_tolerance = 1e-3;
    double single_weight = 0.95;
    double sparse_fraction = 0.25;      // need ceil(K * fraction) live components
    double live_weight_factor = 0.1;    // live means pi_k > factor / K

    bool operator==(const CollapseThresholds&) const = default;
};

struct TrainConfig {
    LossRegime regime = LossRegime::Smoothed;
    std::size_t components = 25;
    GridKind grid = GridKind::Square;
    bool periodic = true;
    std::size_t batch_size = 1;
    std::size_t iterations = 24000;
    AnnealingSchedule sigma{1.2, 0.01, 7200, 19200};
    AnnealingSchedule epsilon{0.05, 0.009, 7200, 19200};
    bool annealing = true;  // false: sigma stays at sigma.end throughout
    InitSpec init;
    bool tied_spherical = false;
    bool train_weights = true;
    bool train_precisions = true;
    PrecisionBounds bounds;
    double weight_floor = kWeightFloor;
    std::uint64_t seed = 0;
    std::size_t history_every = 100;
    BatchSampling sampling = BatchSampling::WithReplacement;
    std::size_t probe_size = 200;
    CollapseThresholds collapse;
    double kernel_rebuild_tolerance = 1e-4;

    void validate() const;
    GridTopology topology() const { return {grid, components, periodic}; }

    bool operator==(const TrainConfig&) const = default;
};

/// Gradients of a log-likelihood-family loss (to be ascended).
struct Gradients {
    Matrix mu;                    // K x D
    Matrix precision;             // K x D, w.r.t. precision roots
    std::vector<double> weights;  // K

    Gradients(std::size_t K, std::size_t D) : mu(K, D), precision(K, D), weights(K, 0.0) {}
};

double gradient_norm(const Gradients& g);

enum class Diagnosis { Healthy, Degenerate, SingleComponent, Sparse };

std::string_view to_string(Diagnosis d);
Diagnosis parse_diagnosis(std::string_view s);
std::string_view to_string(LossRegime r);
LossRegime parse_regime(std::string_view s);

struct HistoryRow {
    std::size_t t = 0;
    double loss = 0.0;
    double sigma = 0.0;
    double epsilon = 0.0;
    Diagnosis diagnosis = Diagnosis::Healthy;

    bool operator==(const HistoryRow&) const = default;
};

/// Data summary used for collapse detection and loss monitoring.
struct DataStats {
    std::vector<double> mean;
    std::vector<double> variance;
    DataSet probe;

    // Root of the summed per-coordinate variances.
    double scale() const;
};

DataStats compute_data_stats(const DataSet& data, std::size_t probe_size, std::uint64_t seed);

struct TrainState {
    MixtureModel model;
    std::size_t t = 0;
    std::vector<HistoryRow> history;
    Rng rng;
    std::optional<NeighborhoodKernel> kernel;  // cached, see kernel_rebuild_tolerance
};

/// Raised when a step would produce non-finite parameters or loss. Carries
/// the last finite model.
class NumericAbort : public NumericError {
public:
    NumericAbort(const std::string& what, MixtureModel last_good, std::size_t t)
        : NumericError(what), snapshot(std::move(last_good)), iteration(t) {}

    MixtureModel snapshot;
    std::size_t iteration;
};

MixtureModel init_model(const TrainConfig& config, const DataSet& data, Rng& rng);

/// Batch-averaged gradients of the full log-likelihood, weighted by the
/// soft responsibilities.
Gradients grad_exact(const DataSet& batch, const MixtureModel& model);

/// Batch-averaged subgradients of the smoothed max-component loss. Each
/// sample flows through the kernel row of its winning component only.
Gradients grad_smoothed(const DataSet& batch, const MixtureModel& model,
                        const NeighborhoodKernel& kernel);

Gradients grad_max_component(const DataSet& batch, const MixtureModel& model);

/// Replaces the weight gradient by its projection onto the tangent cone of
/// the simplex; components sitting at the weight floor count as active
/// bounds. Zero result means the weights are stationary.
void project_weight_gradient(const MixtureModel& model, Gradients& grads,
                             double weight_floor = kWeightFloor);

void enforce_constraints(MixtureModel& model, const PrecisionBounds& bounds = {},
                         double weight_floor = kWeightFloor);

/// Kernel in effect at iteration state.t for the configured regime.
const NeighborhoodKernel* current_kernel(TrainState& state, const TrainConfig& config);

/// Loss of the configured regime; `kernel` may be null for the exact regime.
double regime_loss(const DataSet& data, const MixtureModel& model, LossRegime regime,
                   const NeighborhoodKernel* kernel);

/// One ascent step on `batch`. Appends a history row when `stats` is given
/// and the new iteration hits the cadence.
void sgd_step(TrainState& state, const DataSet& batch, const TrainConfig& config,
              const DataStats* stats = nullptr);

HistoryRow make_history_row(TrainState& state, const TrainConfig& config, const DataStats& stats);

Diagnosis detect_collapse(const MixtureModel& model, const DataStats& stats,
                          const CollapseThresholds& thresholds = {});

class Trainer {
public:
    Trainer(TrainConfig config, const DataSet& data);
    // Continue from a restored state (see checkpoint.h).
    Trainer(TrainConfig config, const DataSet& data, TrainState resumed);
    // The trainer keeps a reference to the data.
    Trainer(TrainConfig, DataSet&&) = delete;
    Trainer(TrainConfig, DataSet&&, TrainState) = delete;

    void step();
    void run();
    bool done() const { return state_.t >= config_.iterations; }

    const TrainState& state() const { return state_; }
    const TrainConfig& config() const { return config_; }
    const DataStats& stats() const { return stats_; }

private:
    DataSet next_batch();

    TrainConfig config_;
    const DataSet* data_;
    DataStats stats_;
    TrainState state_;
    std::vector<std::size_t> permutation_;
    std::size_t permutation_epoch_ = static_cast<std::size_t>(-1);
};

struct TrainResult {
    MixtureModel model;
    std::vector<HistoryRow> history;
};

TrainResult train(const TrainConfig& config, const DataSet& data);

}  // namespace gmmsom
