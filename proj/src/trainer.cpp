#include "gmmsom/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gmmsom {

namespace {

void check_batch(const DataSet& batch, const MixtureModel& model) {
    if (batch.count() == 0) throw UsageError("empty batch");
    if (batch.dim() != model.dim()) throw UsageError("batch dimension does not match model");
}

// Accumulate one sample's contribution to component j with weight w.
void accumulate(Gradients& g, const MixtureModel& model, std::span<const double> x, std::size_t j,
                double w) {
    const auto mu = model.centroids.row(j);
    const auto d = model.precision_roots.row(j);
    auto gmu = g.mu.row(j);
    auto gd = g.precision.row(j);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = x[i] - mu[i];
        const double coef = w * (d[i] * d[i]);
        gmu[i] += coef * r;
        gd[i] += w * (1.0 / d[i] - d[i] * r * r);
    }
    g.weights[j] += w / model.weights[j];
}

void scale(Gradients& g, double s) {
    for (double& v : g.mu.values()) v *= s;
    for (double& v : g.precision.values()) v *= s;
    for (double& v : g.weights) v *= s;
}

}  // namespace

void TrainConfig::validate() const {
    if (components == 0) throw UsageError("K must be >= 1");
    (void)topology();
    if (batch_size == 0) throw UsageError("batch_size must be >= 1");
    if (iterations == 0) throw UsageError("iterations must be >= 1");
    if (history_every == 0) throw UsageError("history_every must be >= 1");
    if (probe_size == 0) throw UsageError("probe_size must be >= 1");
    sigma.validate();
    epsilon.validate();
    if (!(bounds.min > 0.0) || !(bounds.max > bounds.min)) throw UsageError("bad precision bounds");
    const double d0 = std::sqrt(init.precision_sq);
    if (!(d0 >= bounds.min && d0 <= bounds.max)) {
        throw UsageError("initial precision outside the precision bounds");
    }
    if (!(init.centroid_scale >= 0.0)) throw UsageError("centroid scale must be >= 0");
    if (!(weight_floor > 0.0) || weight_floor * static_cast<double>(components) >= 1.0) {
        throw UsageError("weight floor must lie in (0, 1/K)");
    }
    if (!(kernel_rebuild_tolerance >= 0.0)) throw UsageError("kernel tolerance must be >= 0");
}

double gradient_norm(const Gradients& g) {
    double s = 0.0;
    for (double v : g.mu.values()) s += v * v;
    for (double v : g.precision.values()) s += v * v;
    for (double v : g.weights) s += v * v;
    return std::sqrt(s);
}

std::string_view to_string(Diagnosis d) {
    switch (d) {
        case Diagnosis::Healthy: return "healthy";
        case Diagnosis::Degenerate: return "degenerate";
        case Diagnosis::SingleComponent: return "single_component";
        case Diagnosis::Sparse: return "sparse";
    }
    return "unknown";
}

Diagnosis parse_diagnosis(std::string_view s) {
    for (auto d : {Diagnosis::Healthy, Diagnosis::Degenerate, Diagnosis::SingleComponent,
                   Diagnosis::Sparse}) {
        if (to_string(d) == s) return d;
    }
    throw InputError("unknown diagnosis '" + std::string(s) + "'");
}

std::string_view to_string(LossRegime r) {
    switch (r) {
        case LossRegime::Exact: return "exact";
        case LossRegime::MaxComponent: return "max_component";
        case LossRegime::Smoothed: return "smoothed";
    }
    return "unknown";
}

LossRegime parse_regime(std::string_view s) {
    for (auto r : {LossRegime::Exact, LossRegime::MaxComponent, LossRegime::Smoothed}) {
        if (to_string(r) == s) return r;
    }
    throw UsageError("unknown loss regime '" + std::string(s) + "'");
}

double DataStats::scale() const {
    double s = 0.0;
    for (double v : variance) s += v;
    return std::sqrt(s);
}

DataStats compute_data_stats(const DataSet& data, std::size_t probe_size, std::uint64_t seed) {
    data.validate();
    const std::size_t N = data.count();
    const std::size_t D = data.dim();
    DataStats stats;
    stats.mean.assign(D, 0.0);
    stats.variance.assign(D, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t i = 0; i < D; ++i) stats.mean[i] += data[n][i];
    }
    for (double& m : stats.mean) m /= static_cast<double>(N);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t i = 0; i < D; ++i) {
            const double r = data[n][i] - stats.mean[i];
            stats.variance[i] += r * r;
        }
    }
    for (double& v : stats.variance) v /= static_cast<double>(N);

    std::vector<std::size_t> all(N);
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::size_t> picked;
    if (N <= probe_size) {
        picked = all;
    } else {
        std::seed_seq seq{seed, std::uint64_t{0x70726f6265}};
        Rng rng(seq);
        std::sample(all.begin(), all.end(), std::back_inserter(picked), probe_size, rng);
    }
    Matrix probe(picked.size(), D);
    for (std::size_t p = 0; p < picked.size(); ++p) {
        std::copy_n(data[picked[p]].begin(), D, probe.row(p).begin());
    }
    stats.probe = DataSet(std::move(probe), data.meta);
    return stats;
}

MixtureModel init_model(const TrainConfig& config, const DataSet& data, Rng& rng) {
    config.validate();
    data.validate();
    const std::size_t K = config.components;
    const std::size_t D = data.dim();
    MixtureModel model(K, D, std::sqrt(config.init.precision_sq), config.tied_spherical);
    if (config.init.centroids == CentroidInit::SmallRandom) {
        std::uniform_real_distribution<double> u(-config.init.centroid_scale,
                                                 config.init.centroid_scale);
        for (double& c : model.centroids.values()) c = u(rng);
    } else {
        const DataStats stats = compute_data_stats(data, 1, config.seed);
        for (std::size_t k = 0; k < K; ++k) {
            std::copy(stats.mean.begin(), stats.mean.end(), model.centroids.row(k).begin());
        }
    }
    return model;
}

Gradients grad_exact(const DataSet& batch, const MixtureModel& model) {
    check_batch(batch, model);
    const std::size_t K = model.components();
    Gradients g(K, model.dim());
    std::vector<double> terms(K);
    for (std::size_t n = 0; n < batch.count(); ++n) {
        joint_log_terms(batch[n], model, terms);
        const double lse = log_sum_exp(terms);
        for (std::size_t k = 0; k < K; ++k) {
            accumulate(g, model, batch[n], k, std::exp(terms[k] - lse));
        }
    }
    scale(g, 1.0 / static_cast<double>(batch.count()));
    return g;
}

Gradients grad_smoothed(const DataSet& batch, const MixtureModel& model,
                        const NeighborhoodKernel& kernel) {
    check_batch(batch, model);
    const std::size_t K = model.components();
    if (kernel.components() != K) throw UsageError("kernel size does not match model");
    Gradients g(K, model.dim());
    std::vector<double> terms(K);
    for (std::size_t n = 0; n < batch.count(); ++n) {
        joint_log_terms(batch[n], model, terms);
        const std::size_t winner = smoothed_winner(terms, kernel).index;
        const auto row = kernel.row(winner);
        for (std::size_t j = 0; j < K; ++j) {
            if (row[j] > 0.0) accumulate(g, model, batch[n], j, row[j]);
        }
    }
    scale(g, 1.0 / static_cast<double>(batch.count()));
    return g;
}

Gradients grad_max_component(const DataSet& batch, const MixtureModel& model) {
    return grad_smoothed(batch, model, NeighborhoodKernel::identity(model.components()));
}

void project_weight_gradient(const MixtureModel& model, Gradients& grads, double weight_floor) {
    const std::size_t K = model.components();
    std::vector<bool> at_floor(K);
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t k = 0; k < K; ++k) {
        at_floor[k] = model.weights[k] <= 2.0 * weight_floor;
        if (!at_floor[k]) {
            free_sum += grads.weights[k];
            ++free_count;
        }
    }
    const double lambda = free_count ? free_sum / static_cast<double>(free_count) : 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double r = grads.weights[k] - lambda;
        grads.weights[k] = at_floor[k] ? std::max(0.0, r) : r;
    }
}

void enforce_constraints(MixtureModel& model, const PrecisionBounds& bounds, double weight_floor) {
    const std::size_t K = model.components();
    if (model.tied_spherical) {
        const double w = 1.0 / static_cast<double>(K);
        std::fill(model.weights.begin(), model.weights.end(), w);
        auto d = model.precision_roots.values();
        const bool equal = std::all_of(d.begin(), d.end(), [&](double v) { return v == d[0]; });
        if (!equal) {
            const double avg = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
            std::fill(d.begin(), d.end(), avg);
        }
    } else {
        auto normalize = [&] {
            const double sum = std::accumulate(model.weights.begin(), model.weights.end(), 0.0);
            for (double& w : model.weights) w /= sum;
        };
        normalize();
        bool floored = false;
        for (double& w : model.weights) {
            if (w < weight_floor) {
                w = weight_floor;
                floored = true;
            }
        }
        if (floored) normalize();
    }
    for (double& d : model.precision_roots.values()) d = std::clamp(d, bounds.min, bounds.max);
}

const NeighborhoodKernel* current_kernel(TrainState& state, const TrainConfig& config) {
    const std::size_t K = config.components;
    switch (config.regime) {
        case LossRegime::Exact:
            return nullptr;
        case LossRegime::MaxComponent:
            if (!state.kernel || !state.kernel->is_identity()) {
                state.kernel = NeighborhoodKernel::identity(K);
            }
            return &*state.kernel;
        case LossRegime::Smoothed: {
            const double sigma = config.annealing ? sigma_at(config.sigma, static_cast<double>(state.t))
                                                  : config.sigma.end;
            const bool stale = !state.kernel || state.kernel->sigma() <= 0.0 ||
                               std::abs(sigma - state.kernel->sigma()) >
                                   config.kernel_rebuild_tolerance * state.kernel->sigma();
            if (stale) state.kernel = build_kernel(config.topology(), sigma);
            return &*state.kernel;
        }
    }
    return nullptr;
}

double regime_loss(const DataSet& data, const MixtureModel& model, LossRegime regime,
                   const NeighborhoodKernel* kernel) {
    switch (regime) {
        case LossRegime::Exact: return full_log_likelihood(data, model);
        case LossRegime::MaxComponent: return max_component_log_likelihood(data, model);
        case LossRegime::Smoothed:
            if (!kernel) throw UsageError("smoothed loss needs a kernel");
            return smoothed_log_likelihood(data, model, *kernel);
    }
    return 0.0;
}

HistoryRow make_history_row(TrainState& state, const TrainConfig& config, const DataStats& stats) {
    const double t = static_cast<double>(state.t);
    HistoryRow row;
    row.t = state.t;
    row.sigma = config.annealing ? sigma_at(config.sigma, t) : config.sigma.end;
    row.epsilon = epsilon_at(config.epsilon, t);
    row.loss = regime_loss(stats.probe, state.model, config.regime, current_kernel(state, config));
    row.diagnosis = detect_collapse(state.model, stats, config.collapse);
    return row;
}

void sgd_step(TrainState& state, const DataSet& batch, const TrainConfig& config,
              const DataStats* stats) {
    if (state.t >= config.iterations) throw UsageError("training already finished");
    MixtureModel& model = state.model;
    const double eps = epsilon_at(config.epsilon, static_cast<double>(state.t));
    const NeighborhoodKernel* kernel = current_kernel(state, config);
    const Gradients g = config.regime == LossRegime::Exact ? grad_exact(batch, model)
                                                           : grad_smoothed(batch, model, *kernel);

    const bool step_weights = config.train_weights && !model.tied_spherical;
    const bool step_precisions = config.train_precisions && !model.tied_spherical;

    MixtureModel next = model;
    auto apply = [eps](std::span<double> params, std::span<const double> grad) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] += eps * grad[i];
    };
    apply(next.centroids.values(), g.mu.values());
    if (step_precisions) apply(next.precision_roots.values(), g.precision.values());
    if (step_weights) apply(next.weights, g.weights);
    if (!next.is_finite()) {
        throw NumericAbort("non-finite parameters at iteration " + std::to_string(state.t),
                           model, state.t);
    }
    enforce_constraints(next, config.bounds, config.weight_floor);
    model = std::move(next);
    ++state.t;

    if (stats && (state.t % config.history_every == 0 || state.t == config.iterations)) {
        HistoryRow row = make_history_row(state, config, *stats);
        if (!std::isfinite(row.loss)) {
            throw NumericAbort("non-finite loss at iteration " + std::to_string(state.t), model,
                               state.t);
        }
        state.history.push_back(row);
    }
}

Diagnosis detect_collapse(const MixtureModel& model, const DataStats& stats,
                          const CollapseThresholds& th) {
    const std::size_t K = model.components();
    if (K == 1) return Diagnosis::Healthy;

    double max_dist_sq = 0.0;
    for (std::size_t a = 0; a < K; ++a) {
        for (std::size_t b = a + 1; b < K; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < model.dim(); ++i) {
                const double r = model.centroids(a, i) - model.centroids(b, i);
                s += r * r;
            }
            max_dist_sq = std::max(max_dist_sq, s);
        }
    }
    const double limit = th.degenerate_distance * stats.scale();
    if (std::sqrt(max_dist_sq) < limit) {
        const Responsibilities r = responsibilities(stats.probe, model);
        const double uniform = 1.0 / static_cast<double>(K);
        const auto gamma = r.gamma.values();
        const bool flat = std::all_of(gamma.begin(), gamma.end(), [&](double v) {
            return std::abs(v - uniform) <= th.uniform_tolerance;
        });
        if (flat) return Diagnosis::Degenerate;
    }
    if (*std::max_element(model.weights.begin(), model.weights.end()) > th.single_weight) {
        return Diagnosis::SingleComponent;
    }
    const double live_limit = th.live_weight_factor / static_cast<double>(K);
    const auto live = static_cast<std::size_t>(
        std::count_if(model.weights.begin(), model.weights.end(), [&](double w) { return w > live_limit; }));
    const auto needed = static_cast<std::size_t>(std::ceil(th.sparse_fraction * static_cast<double>(K)));
    if (live < needed) return Diagnosis::Sparse;
    return Diagnosis::Healthy;
}

Trainer::Trainer(TrainConfig config, const DataSet& data)
    : config_(std::move(config)), data_(&data) {
    config_.validate();
    data.validate();
    stats_ = compute_data_stats(data, config_.probe_size, config_.seed);
    state_.rng.seed(config_.seed);
    state_.model = init_model(config_, data, state_.rng);
    state_.history.push_back(make_history_row(state_, config_, stats_));
}

Trainer::Trainer(TrainConfig config, const DataSet& data, TrainState resumed)
    : config_(std::move(config)), data_(&data), state_(std::move(resumed)) {
    config_.validate();
    data.validate();
    if (state_.model.components() != config_.components || state_.model.dim() != data.dim()) {
        throw UsageError("resumed model does not match configuration or data");
    }
    if (state_.t > config_.iterations) throw UsageError("resumed iteration beyond configured total");
    stats_ = compute_data_stats(data, config_.probe_size, config_.seed);
}

DataSet Trainer::next_batch() {
    const std::size_t N = data_->count();
    const std::size_t B = config_.batch_size;
    Matrix batch(B, data_->dim());
    for (std::size_t b = 0; b < B; ++b) {
        std::size_t index = 0;
        if (config_.sampling == BatchSampling::WithReplacement) {
            index = std::uniform_int_distribution<std::size_t>(0, N - 1)(state_.rng);
        } else {
            const std::size_t position = state_.t * B + b;
            const std::size_t epoch = position / N;
            if (epoch != permutation_epoch_) {
                permutation_.resize(N);
                std::iota(permutation_.begin(), permutation_.end(), 0);
                std::seed_seq seq{config_.seed, static_cast<std::uint64_t>(epoch)};
                Rng shuffler(seq);
                std::shuffle(permutation_.begin(), permutation_.end(), shuffler);
                permutation_epoch_ = epoch;
            }
            index = permutation_[position % N];
        }
        std::copy_n((*data_)[index].begin(), data_->dim(), batch.row(b).begin());
    }
    return DataSet(std::move(batch));
}

void Trainer::step() {
    DataSet batch = next_batch();
    sgd_step(state_, batch, config_, &stats_);
}

void Trainer::run() {
    while (!done()) step();
}

TrainResult train(const TrainConfig& config, const DataSet& data) {
    Trainer trainer(config, data);
    trainer.run();
    return {trainer.state().model, trainer.state().history};
}

}  // namespace gmmsom
