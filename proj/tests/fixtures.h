// Shared random-instance generators for the tests.
#pragma once

#include <cmath>
#include <random>

#include <unistd.h>

#include "gmmsom/model.h"
#include "gmmsom/trainer.h"

namespace fixtures {

using gmmsom::DataSet;
using gmmsom::Matrix;
using gmmsom::MixtureModel;
using gmmsom::Rng;

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
}

inline double gaussian(Rng& rng) {
    const double u1 = 1.0 - std::generate_canonical<double, 53>(rng);
    const double u2 = std::generate_canonical<double, 53>(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline DataSet random_data(Rng& rng, std::size_t N, std::size_t D, double scale = 1.0) {
    Matrix x(N, D);
    for (double& v : x.values()) v = scale * gaussian(rng);
    return DataSet(std::move(x));
}

inline MixtureModel random_model(Rng& rng, std::size_t K, std::size_t D, double d_lo = 0.5, double d_hi = 2.0) {
    MixtureModel m(K, D, 1.0);
    double sum = 0.0;
    for (double& w : m.weights) {
        w = uniform(rng, 0.2, 1.0);
        sum += w;
    }
    for (double& w : m.weights) w /= sum;
    for (double& c : m.centroids.values()) c = gaussian(rng);
    for (double& d : m.precision_roots.values()) d = uniform(rng, d_lo, d_hi);
    return m;
}

inline MixtureModel random_tied_model(Rng& rng, std::size_t K, std::size_t D, double d) {
    MixtureModel m(K, D, d, true);
    for (double& c : m.centroids.values()) c = gaussian(rng);
    return m;
}

inline DataSet rows(std::initializer_list<std::initializer_list<double>> values) {
    const std::size_t N = values.size();
    const std::size_t D = values.begin()->size();
    Matrix x(N, D);
    std::size_t n = 0;
    for (const auto& r : values) {
        std::size_t i = 0;
        for (double v : r) x(n, i++) = v;
        ++n;
    }
    return DataSet(std::move(x));
}

}  // namespace fixtures

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

namespace fixtures {

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("gmmsom_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace fixtures
