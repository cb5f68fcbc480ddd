#pragma once

#include <cstring>
#include <span>
#include <vector>

#include "lifeseq/common.hpp"

namespace lifeseq {

// Row-major dense matrix. Kept deliberately small: the model code needs
// contiguous storage, cheap row views and a handful of GEMM variants.
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, 0.0) {}
    Mat(int rows, int cols, real fill)
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return a_.size(); }

    real* data() { return a_.data(); }
    const real* data() const { return a_.data(); }

    real& operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * cols_ + c]; }
    real operator()(int r, int c) const { return a_[static_cast<std::size_t>(r) * cols_ + c]; }

    real* row(int r) { return a_.data() + static_cast<std::size_t>(r) * cols_; }
    const real* row(int r) const { return a_.data() + static_cast<std::size_t>(r) * cols_; }

    std::span<real> row_span(int r) { return {row(r), static_cast<std::size_t>(cols_)}; }
    std::span<const real> row_span(int r) const { return {row(r), static_cast<std::size_t>(cols_)}; }

    void fill(real v) { std::fill(a_.begin(), a_.end(), v); }
    void zero() { fill(0.0); }

    friend bool operator==(const Mat& x, const Mat& y) {
        return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.a_ == y.a_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<real> a_;
};

// out = A(m,k) * B(k,n); `accumulate` adds into out instead of overwriting.
void matmul(const Mat& A, const Mat& B, Mat& out, bool accumulate = false);
// out = A^T(m,k->k,m) * B ... i.e. out(k1,n) = sum_m A(m,k1)*B(m,n)
void matmul_tA(const Mat& A, const Mat& B, Mat& out, bool accumulate = false);
// out(m, k) = sum_n A(m,n) * B(k,n)  == A * B^T
void matmul_tB(const Mat& A, const Mat& B, Mat& out, bool accumulate = false);

void add_inplace(Mat& x, const Mat& y, real scale = 1.0);
void scale_inplace(Mat& x, real s);

real dot(const real* a, const real* b, int n);
void axpy(real alpha, const real* x, real* y, int n);  // y += alpha * x

real l2_norm(const real* a, int n);
real max_abs(const Mat& x);

}  // namespace lifeseq
