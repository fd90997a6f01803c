#include "stfc/dense.hpp"

#include <cassert>

#include "stfc/parallel.hpp"

namespace stfc {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols == b.rows);
    out = Matrix(a.rows, b.cols);
    const std::int64_t k = a.cols, n = b.cols;
    parallel_for(0, a.rows, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            double* __restrict__ ci = out.row(i);
            const double* __restrict__ ai = a.row(i);
            for (std::int64_t kk = 0; kk < k; ++kk) {
                const double av = ai[kk];
                const double* __restrict__ bk = b.row(kk);
                for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bk[j];
            }
        }
    });
}

void matmul_at_b_accum(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
    const std::int64_t k = a.rows, n = b.cols;
    parallel_for(0, a.cols, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            double* __restrict__ ci = out.row(i);
            for (std::int64_t kk = 0; kk < k; ++kk) {
                const double av = a(kk, i);
                if (av == 0.0) continue;
                const double* __restrict__ bk = b.row(kk);
                for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bk[j];
            }
        }
    });
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols == b.cols);
    out = Matrix(a.rows, b.rows);
    const std::int64_t k = a.cols, n = b.rows;
    parallel_for(0, a.rows, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            double* __restrict__ ci = out.row(i);
            const double* __restrict__ ai = a.row(i);
            for (std::int64_t j = 0; j < n; ++j) {
                const double* __restrict__ bj = b.row(j);
                double acc = 0.0;
                for (std::int64_t kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
                ci[j] = acc;
            }
        }
    });
}

}  // namespace stfc
