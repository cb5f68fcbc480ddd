#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lifeseq/matrix.hpp"

namespace lifeseq {

// Boolean key mask; empty means "all positions attend". A masked key is
// excluded from every softmax and contributes nothing to FAVOR+ sums.
using KeyMask = std::vector<std::uint8_t>;

// Exact scaled-dot-product attention, softmax stabilized by row-max
// subtraction. Rows whose key set is entirely masked yield zero output.
// `weights` (L x L) is filled when supplied so backward can reuse it.
void softmax_attention(const Mat& Q, const Mat& K, const Mat& V, const KeyMask& mask, Mat& out,
                       Mat* weights = nullptr);

// Same computation restricted to |i - j| <= window / 2. window >= 2L makes it
// identical to softmax_attention (bit for bit: same summation order).
void local_softmax_attention(const Mat& Q, const Mat& K, const Mat& V, int window,
                             const KeyMask& mask, Mat& out, Mat* weights = nullptr);

// Backward for either softmax variant given the cached weight matrix.
void softmax_attention_backward(const Mat& Q, const Mat& K, const Mat& V, const Mat& weights,
                                const Mat& d_out, Mat& dQ, Mat& dK, Mat& dV);

// Positive orthogonal random features for the softmax kernel. Rows are
// orthogonalized in d_h-sized blocks and rescaled to chi(d_h) lengths.
struct PerformerFeatureMap {
    Mat projection;  // r x d_h
};

PerformerFeatureMap make_performer_feature_map(int n_features, int head_dim, std::uint64_t seed);

struct PerformerCache {
    Mat Qs, Ks;      // inputs scaled by d_h^(-1/4)
    Mat Qp, Kp;      // feature-mapped (L x r); masked key rows are zero
    Mat kv;          // K'^T V  (r x d_h)
    Vec ksum;        // K'^T 1  (r)
    Vec denom;       // per-row normalizer
    Mat out;         // normalized output (kept for backward)
};

// FAVOR+ attention: out = diag(Q'(K'^T 1))^-1 (Q'(K'^T V)). Never forms an
// L x L matrix. Throws ComputeError when a normalizer entry drops below 1e-8.
void performer_attention(const Mat& Q, const Mat& K, const Mat& V, const PerformerFeatureMap& fm,
                         const KeyMask& mask, Mat& out, PerformerCache* cache = nullptr);

void performer_attention_backward(const PerformerFeatureMap& fm, const KeyMask& mask,
                                  const PerformerCache& cache, const Mat& V, const Mat& d_out,
                                  Mat& dQ, Mat& dK, Mat& dV);

}  // namespace lifeseq
