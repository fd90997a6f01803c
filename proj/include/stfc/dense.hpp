#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace stfc {

// Row-major dense matrix of doubles. All model math runs in 64-bit.
struct Matrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::int64_t r, std::int64_t c) : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0) {}

    double* row(std::int64_t i) { return data.data() + i * cols; }
    const double* row(std::int64_t i) const { return data.data() + i * cols; }
    double& operator()(std::int64_t i, std::int64_t j) { return data[static_cast<std::size_t>(i * cols + j)]; }
    double operator()(std::int64_t i, std::int64_t j) const { return data[static_cast<std::size_t>(i * cols + j)]; }

    std::span<const double> row_span(std::int64_t i) const { return {row(i), static_cast<std::size_t>(cols)}; }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// out = a * b. Parallel over rows of out; each output row is produced by one
// worker with a fixed k-order, so results are thread-count independent.
void matmul(const Matrix& a, const Matrix& b, Matrix& out);

// out += a^T * b  (a is k x m, b is k x n, out is m x n).
void matmul_at_b_accum(const Matrix& a, const Matrix& b, Matrix& out);

// out = a * b^T  (a is m x k, b is n x k, out is m x n).
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out);

}  // namespace stfc
