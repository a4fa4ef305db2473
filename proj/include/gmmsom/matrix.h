#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gmmsom {

// Dense row-major matrix of doubles. Rows are samples or components.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    void fill(double v) { values_.assign(values_.size(), v); }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

}  // namespace gmmsom
