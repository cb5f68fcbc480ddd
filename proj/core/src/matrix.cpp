#include "lifeseq/matrix.hpp"

#include <cassert>
#include <cmath>

namespace lifeseq {

real dot(const real* a, const real* b, int n) {
    real s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(real alpha, const real* x, real* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

real l2_norm(const real* a, int n) {
    return std::sqrt(dot(a, a, n));
}

real max_abs(const Mat& x) {
    real m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x.data()[i]));
    return m;
}

void matmul(const Mat& A, const Mat& B, Mat& out, bool accumulate) {
    assert(A.cols() == B.rows());
    const int m = A.rows(), k = A.cols(), n = B.cols();
    if (out.rows() != m || out.cols() != n) out = Mat(m, n);
    if (!accumulate) out.zero();
    // ikj order: streams over B and out rows, vectorizes on n.
    for (int i = 0; i < m; ++i) {
        real* orow = out.row(i);
        const real* arow = A.row(i);
        for (int p = 0; p < k; ++p) {
            const real a = arow[p];
            if (a == 0.0) continue;
            axpy(a, B.row(p), orow, n);
        }
    }
}

void matmul_tA(const Mat& A, const Mat& B, Mat& out, bool accumulate) {
    assert(A.rows() == B.rows());
    const int m = A.rows(), k = A.cols(), n = B.cols();
    if (out.rows() != k || out.cols() != n) out = Mat(k, n);
    if (!accumulate) out.zero();
    for (int i = 0; i < m; ++i) {
        const real* arow = A.row(i);
        const real* brow = B.row(i);
        for (int p = 0; p < k; ++p) {
            const real a = arow[p];
            if (a == 0.0) continue;
            axpy(a, brow, out.row(p), n);
        }
    }
}

void matmul_tB(const Mat& A, const Mat& B, Mat& out, bool accumulate) {
    assert(A.cols() == B.cols());
    const int m = A.rows(), n = B.rows(), k = A.cols();
    if (out.rows() != m || out.cols() != n) out = Mat(m, n);
    if (!accumulate) out.zero();
    for (int i = 0; i < m; ++i) {
        const real* arow = A.row(i);
        real* orow = out.row(i);
        for (int j = 0; j < n; ++j) orow[j] += dot(arow, B.row(j), k);
    }
}

void add_inplace(Mat& x, const Mat& y, real scale) {
    assert(x.rows() == y.rows() && x.cols() == y.cols());
    axpy(scale, y.data(), x.data(), static_cast<int>(x.size()));
}

void scale_inplace(Mat& x, real s) {
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] *= s;
}

}  // namespace lifeseq
