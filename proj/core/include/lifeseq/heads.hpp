#pragma once

#include "lifeseq/params.hpp"

namespace lifeseq {

// --- tied MLM projection ----------------------------------------------------
// The final MLM layer is the concept embedding matrix itself: rows are
// mean-removed, then l2-normalized so only directions survive. Gradients flow
// back into the same storage.
struct TiedProjection {
    Mat ehat;   // |V| x d, normalized mean-removed rows
    Vec mnorm;  // per-row norms of the mean-removed matrix
};

TiedProjection make_tied_projection(const Mat& concept_emb);
// Accumulates d(loss)/d(concept matrix) given d(loss)/d(ehat), including the
// exact mean-removal coupling across all rows.
void tied_projection_backward(const TiedProjection& tp, const Mat& d_ehat, Mat& d_concept);

struct MlmHead {
    Param* w1 = nullptr;  // d x d
    Param* b1 = nullptr;  // 1 x d
};

struct MlmCache {
    Mat x;      // inputs (masked-position rows)
    Mat t;      // tanh(x W1 + b1)
    Vec tnorm;  // row norms of t
    Mat u;      // normalized t
};

// logits = scale * norm(tanh(x W1 + b1)) ehat^T : cosine scores against the
// normalized embedding rows, sharpened by `scale`.
Mat mlm_decode(const Mat& masked_rows, const MlmHead& head, const TiedProjection& tp, real scale,
               MlmCache* cache = nullptr);
// Returns d(loss)/d(masked_rows); accumulates head and concept gradients.
Mat mlm_decode_backward(const MlmHead& head, const TiedProjection& tp, real scale,
                        const MlmCache& cache, const Mat& d_logits, Mat& d_concept);

// --- SOP / ordinal two-layer heads ------------------------------------------
// ScaleNorm[swish(x W1 + b1)] W2 + b2
struct TwoLayerHead {
    Param* w1 = nullptr;
    Param* b1 = nullptr;
    Param* norm_g = nullptr;
    Param* w2 = nullptr;
    Param* b2 = nullptr;
};

struct TwoLayerCache {
    Mat x, a1, s1, n1;
    Vec r1;
};

Mat two_layer_decode(const Mat& x, const TwoLayerHead& head, TwoLayerCache* cache = nullptr);
Mat two_layer_decode_backward(const TwoLayerHead& head, const TwoLayerCache& cache,
                              const Mat& d_logits);

// --- pooled attention decoder -------------------------------------------------
// Additive attention over contextual rows with a trainable context vector;
// the weighted average is the person summary, followed by a two-layer head.
struct PooledHead {
    Param* w1 = nullptr;   // d x d (attention transform)
    Param* b1 = nullptr;   // 1 x d
    Param* ctx = nullptr;  // 1 x d trainable context vector
    Param* w2 = nullptr;   // d x d
    Param* b2 = nullptr;   // 1 x d
    Param* w3 = nullptr;   // d x n_classes
    Param* b3 = nullptr;   // 1 x n_classes
};

struct PooledCache {
    Mat h;        // contextual input rows
    Mat au, u;    // pre/post tanh of the attention transform
    Vec scores;   // u_i . ctx
    Vec weights;  // softmax over rows
    Mat summary;  // 1 x d person summary
    Mat a2, h2;   // pre/post swish of the first head layer
};

struct PooledOutput {
    Mat summary;  // 1 x d
    Mat logits;   // 1 x n_classes
};

PooledOutput pooled_decode(const Mat& contextual, const PooledHead& head,
                           PooledCache* cache = nullptr);
// Returns d(loss)/d(contextual); d_summary_extra (optional) adds a gradient
// applied directly to the summary vector.
Mat pooled_decode_backward(const PooledHead& head, const PooledCache& cache, const Mat& d_logits,
                           const Mat* d_summary_extra = nullptr);

// d(logit_class)/d(summary) through the decoder tail only; parameters are
// treated as constants (used by saliency/TCAV).
Vec pooled_tail_gradient(const PooledHead& head, const PooledCache& cache, int cls);

// Attention weights over rows (sums to 1); interpretability export.
Vec pooled_attention_weights(const Mat& contextual, const PooledHead& head);

}  // namespace lifeseq
