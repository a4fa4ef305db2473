// Independent reference implementations used only by the tests. Everything
// here is evaluated in long double, in probability space where possible,
// and shares no code with the library's loss or gradient paths.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "gmmsom/model.h"
#include "gmmsom/topology.h"

namespace oracle {

using LD = long double;
constexpr LD kPi = 3.141592653589793238462643383279502884L;

struct Params {
    std::vector<LD> weights;
    std::vector<std::vector<LD>> mu;
    std::vector<std::vector<LD>> d;
};

inline Params from_model(const gmmsom::MixtureModel& m) {
    Params p;
    for (double w : m.weights) p.weights.push_back(w);
    for (std::size_t k = 0; k < m.components(); ++k) {
        p.mu.emplace_back(m.centroids.row(k).begin(), m.centroids.row(k).end());
        p.d.emplace_back(m.precision_roots.row(k).begin(), m.precision_roots.row(k).end());
    }
    return p;
}

// Density in probability space, then the log.
inline LD log_density(const std::vector<LD>& x, const std::vector<LD>& mu, const std::vector<LD>& d) {
    LD p = 1.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const LD r = x[i] - mu[i];
        p *= d[i] / std::sqrt(2.0L * kPi) * std::exp(-0.5L * d[i] * d[i] * r * r);
    }
    return std::log(p);
}

// Same quantity summed term by term in log space; safe for tiny densities.
inline LD log_density_sum(const std::vector<LD>& x, const std::vector<LD>& mu, const std::vector<LD>& d) {
    LD acc = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const LD r = x[i] - mu[i];
        acc += std::log(d[i]) - 0.5L * std::log(2.0L * kPi) - 0.5L * d[i] * d[i] * r * r;
    }
    return acc;
}

inline std::vector<LD> row(const gmmsom::DataSet& data, std::size_t n) {
    return {data[n].begin(), data[n].end()};
}

inline std::vector<LD> joint_terms(const std::vector<LD>& x, const Params& p) {
    std::vector<LD> t(p.weights.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = std::log(p.weights[k]) + log_density_sum(x, p.mu[k], p.d[k]);
    return t;
}

inline LD full_ll(const gmmsom::DataSet& data, const Params& p) {
    LD total = 0.0L;
    for (std::size_t n = 0; n < data.count(); ++n) {
        const auto x = row(data, n);
        LD s = 0.0L;
        for (std::size_t k = 0; k < p.weights.size(); ++k) s += p.weights[k] * std::exp(log_density_sum(x, p.mu[k], p.d[k]));
        total += std::log(s);
    }
    return total / static_cast<LD>(data.count());
}

// Explicit arg-max scan.
inline std::size_t argmax(const std::vector<LD>& v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (v[k] > v[best]) best = k;
    }
    return best;
}

inline LD max_ll(const gmmsom::DataSet& data, const Params& p) {
    LD total = 0.0L;
    for (std::size_t n = 0; n < data.count(); ++n) {
        const auto t = joint_terms(row(data, n), p);
        total += t[argmax(t)];
    }
    return total / static_cast<LD>(data.count());
}

// Dense K x K Gaussian kernel rebuilt from grid coordinates.
inline std::vector<std::vector<LD>> dense_kernel(const gmmsom::GridTopology& topo, LD sigma) {
    const std::size_t K = topo.components();
    std::vector<std::vector<LD>> g(K, std::vector<LD>(K));
    for (std::size_t k = 0; k < K; ++k) {
        LD sum = 0.0L;
        for (std::size_t j = 0; j < K; ++j) {
            const auto a = topo.coord(k);
            const auto b = topo.coord(j);
            auto off = [&](std::size_t u, std::size_t v, std::size_t n) {
                LD best = std::abs(static_cast<LD>(u) - static_cast<LD>(v));
                if (topo.periodic()) {
                    for (int w : {-1, 1}) best = std::min(best, std::abs(static_cast<LD>(u) - static_cast<LD>(v) + w * static_cast<LD>(n)));
                }
                return best;
            };
            const LD dr = off(a.row, b.row, topo.rows());
            const LD dc = off(a.col, b.col, topo.cols());
            g[k][j] = std::exp(-(dr * dr + dc * dc) / (2.0L * sigma * sigma));
            sum += g[k][j];
        }
        for (auto& v : g[k]) v /= sum;
    }
    return g;
}

inline std::vector<std::vector<LD>> kernel_of(const gmmsom::NeighborhoodKernel& kernel) {
    std::vector<std::vector<LD>> g(kernel.components());
    for (std::size_t k = 0; k < g.size(); ++k) g[k].assign(kernel.row(k).begin(), kernel.row(k).end());
    return g;
}

struct SmoothedEval {
    LD value;
    std::size_t winner;
};

inline SmoothedEval smoothed_sample(const std::vector<LD>& x, const Params& p, const std::vector<std::vector<LD>>& g) {
    const auto t = joint_terms(x, p);
    std::vector<LD> conv(t.size(), 0.0L);
    for (std::size_t k = 0; k < t.size(); ++k) {
        for (std::size_t j = 0; j < t.size(); ++j) conv[k] += g[k][j] * t[j];
    }
    const std::size_t w = argmax(conv);
    return {conv[w], w};
}

inline LD smoothed_ll(const gmmsom::DataSet& data, const Params& p, const std::vector<std::vector<LD>>& g) {
    LD total = 0.0L;
    for (std::size_t n = 0; n < data.count(); ++n) total += smoothed_sample(row(data, n), p, g).value;
    return total / static_cast<LD>(data.count());
}

inline std::vector<std::vector<LD>> responsibilities(const gmmsom::DataSet& data, const Params& p) {
    std::vector<std::vector<LD>> out;
    for (std::size_t n = 0; n < data.count(); ++n) {
        const auto x = row(data, n);
        std::vector<LD> t(p.weights.size());
        LD s = 0.0L;
        for (std::size_t k = 0; k < t.size(); ++k) {
            t[k] = p.weights[k] * std::exp(log_density(x, p.mu[k], p.d[k]));
            s += t[k];
        }
        for (auto& v : t) v /= s;
        out.push_back(t);
    }
    return out;
}

// SOM energy with an exhaustive min over all k.
inline LD som_energy(const gmmsom::DataSet& data, const Params& p, const std::vector<std::vector<LD>>& g) {
    LD total = 0.0L;
    const std::size_t K = p.mu.size();
    for (std::size_t n = 0; n < data.count(); ++n) {
        const auto x = row(data, n);
        LD best = 0.0L;
        for (std::size_t k = 0; k < K; ++k) {
            LD acc = 0.0L;
            for (std::size_t j = 0; j < K; ++j) {
                LD dist = 0.0L;
                for (std::size_t i = 0; i < x.size(); ++i) dist += (x[i] - p.mu[j][i]) * (x[i] - p.mu[j][i]);
                acc += g[k][j] * dist;
            }
            if (k == 0 || acc < best) best = acc;
        }
        total += best;
    }
    return total / static_cast<LD>(data.count());
}

// Central finite difference of f at parameter *slot.
inline LD central_difference(const std::function<LD()>& f, LD& slot, LD h) {
    const LD saved = slot;
    slot = saved + h;
    const LD up = f();
    slot = saved - h;
    const LD down = f();
    slot = saved;
    return (up - down) / (2.0L * h);
}

// Smallest RMSE between found and true centers over all K! pairings.
inline double matched_rmse(const gmmsom::Matrix& found, const std::vector<std::vector<double>>& truth) {
    std::vector<std::size_t> perm(truth.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        double s = 0.0;
        for (std::size_t k = 0; k < truth.size(); ++k) {
            for (std::size_t i = 0; i < truth[k].size(); ++i) {
                const double e = found(perm[k], i) - truth[k][i];
                s += e * e;
            }
        }
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best / static_cast<double>(truth.size() * truth[0].size()));
}

}  // namespace oracle
