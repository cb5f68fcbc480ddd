#include "lifeseq/heads.hpp"

#include <cmath>

#include "lifeseq/common.hpp"
#include "lifeseq/losses.hpp"

namespace lifeseq {

namespace {

constexpr real kNormEps = 1e-12;

void add_bias(Mat& x, const Mat& bias) {
    for (int i = 0; i < x.rows(); ++i) axpy(1.0, bias.row(0), x.row(i), x.cols());
}

void bias_grad(const Mat& d, Mat& db) {
    for (int i = 0; i < d.rows(); ++i) axpy(1.0, d.row(i), db.row(0), d.cols());
}

real swish(real x) { return x / (1.0 + std::exp(-x)); }
real swish_grad(real x) {
    const real s = 1.0 / (1.0 + std::exp(-x));
    return s + x * s * (1.0 - s);
}

}  // namespace

TiedProjection make_tied_projection(const Mat& concept_emb) {
    const int v = concept_emb.rows(), d = concept_emb.cols();
    Vec mean(d, 0.0);
    for (int r = 0; r < v; ++r) axpy(1.0, concept_emb.row(r), mean.data(), d);
    for (int c = 0; c < d; ++c) mean[c] /= static_cast<real>(v);

    TiedProjection tp;
    tp.ehat = Mat(v, d);
    tp.mnorm.assign(v, 0.0);
    for (int r = 0; r < v; ++r) {
        real* dst = tp.ehat.row(r);
        const real* src = concept_emb.row(r);
        for (int c = 0; c < d; ++c) dst[c] = src[c] - mean[c];
        const real n = std::max(l2_norm(dst, d), kNormEps);
        tp.mnorm[r] = n;
        for (int c = 0; c < d; ++c) dst[c] /= n;
    }
    return tp;
}

void tied_projection_backward(const TiedProjection& tp, const Mat& d_ehat, Mat& d_concept) {
    const int v = tp.ehat.rows(), d = tp.ehat.cols();
    Vec total(d, 0.0);
    Vec dm(d);
    for (int r = 0; r < v; ++r) {
        const real* g = d_ehat.row(r);
        const real* e = tp.ehat.row(r);
        const real inner = dot(g, e, d);
        const real inv = 1.0 / tp.mnorm[r];
        for (int c = 0; c < d; ++c) dm[c] = (g[c] - inner * e[c]) * inv;
        axpy(1.0, dm.data(), d_concept.row(r), d);
        axpy(1.0, dm.data(), total.data(), d);
    }
    const real inv_v = 1.0 / static_cast<real>(v);
    for (int r = 0; r < v; ++r) axpy(-inv_v, total.data(), d_concept.row(r), d);
}

Mat mlm_decode(const Mat& masked_rows, const MlmHead& head, const TiedProjection& tp, real scale,
               MlmCache* cache) {
    MlmCache local;
    MlmCache& c = cache ? *cache : local;
    c.x = masked_rows;
    Mat a;
    matmul(masked_rows, head.w1->value, a);
    add_bias(a, head.b1->value);
    c.t = Mat(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) c.t.data()[i] = std::tanh(a.data()[i]);
    c.tnorm.assign(a.rows(), 0.0);
    c.u = Mat(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i) {
        const real n = std::max(l2_norm(c.t.row(i), a.cols()), kNormEps);
        c.tnorm[i] = n;
        const real* src = c.t.row(i);
        real* dst = c.u.row(i);
        for (int k = 0; k < a.cols(); ++k) dst[k] = src[k] / n;
    }
    Mat logits;
    matmul_tB(c.u, tp.ehat, logits);
    scale_inplace(logits, scale);
    return logits;
}

Mat mlm_decode_backward(const MlmHead& head, const TiedProjection& tp, real scale,
                        const MlmCache& cache, const Mat& d_logits, Mat& d_concept) {
    const int m = cache.x.rows(), d = cache.x.cols();
    Mat du;
    matmul(d_logits, tp.ehat, du);
    scale_inplace(du, scale);

    Mat d_ehat;
    matmul_tA(d_logits, cache.u, d_ehat);
    scale_inplace(d_ehat, scale);
    tied_projection_backward(tp, d_ehat, d_concept);

    // through the row normalization and tanh
    Mat da(m, d);
    for (int i = 0; i < m; ++i) {
        const real* g = du.row(i);
        const real* u = cache.u.row(i);
        const real* t = cache.t.row(i);
        const real inner = dot(g, u, d);
        const real inv = 1.0 / cache.tnorm[i];
        real* dst = da.row(i);
        for (int k = 0; k < d; ++k) {
            const real dt = (g[k] - inner * u[k]) * inv;
            dst[k] = dt * (1.0 - t[k] * t[k]);
        }
    }
    matmul_tA(cache.x, da, head.w1->grad, /*accumulate=*/true);
    bias_grad(da, head.b1->grad);
    Mat dx;
    matmul_tB(da, head.w1->value, dx);
    return dx;
}

Mat two_layer_decode(const Mat& x, const TwoLayerHead& head, TwoLayerCache* cache) {
    TwoLayerCache local;
    TwoLayerCache& c = cache ? *cache : local;
    c.x = x;
    matmul(x, head.w1->value, c.a1);
    add_bias(c.a1, head.b1->value);
    c.s1 = Mat(c.a1.rows(), c.a1.cols());
    for (std::size_t i = 0; i < c.a1.size(); ++i) c.s1.data()[i] = swish(c.a1.data()[i]);
    const real g = head.norm_g->scalar();
    c.n1 = Mat(c.s1.rows(), c.s1.cols());
    c.r1.assign(c.s1.rows(), 0.0);
    for (int i = 0; i < c.s1.rows(); ++i) {
        const real r = std::max(l2_norm(c.s1.row(i), c.s1.cols()), kNormEps);
        c.r1[i] = r;
        const real s = g / r;
        for (int k = 0; k < c.s1.cols(); ++k) c.n1(i, k) = s * c.s1(i, k);
    }
    Mat logits;
    matmul(c.n1, head.w2->value, logits);
    add_bias(logits, head.b2->value);
    return logits;
}

Mat two_layer_decode_backward(const TwoLayerHead& head, const TwoLayerCache& cache,
                              const Mat& d_logits) {
    matmul_tA(cache.n1, d_logits, head.w2->grad, /*accumulate=*/true);
    bias_grad(d_logits, head.b2->grad);
    Mat dn;
    matmul_tB(d_logits, head.w2->value, dn);

    const real g = head.norm_g->scalar();
    const int d = cache.s1.cols();
    Mat ds(cache.s1.rows(), d);
    real dg = 0.0;
    for (int i = 0; i < cache.s1.rows(); ++i) {
        const real r = cache.r1[i];
        const real* si = cache.s1.row(i);
        const real* gi = dn.row(i);
        const real inner = dot(si, gi, d);
        dg += inner / r;
        const real a = g / r;
        const real b = g * inner / (r * r * r);
        for (int k = 0; k < d; ++k) ds(i, k) = a * gi[k] - b * si[k];
    }
    head.norm_g->grad(0, 0) += dg;

    for (std::size_t i = 0; i < ds.size(); ++i) ds.data()[i] *= swish_grad(cache.a1.data()[i]);
    matmul_tA(cache.x, ds, head.w1->grad, /*accumulate=*/true);
    bias_grad(ds, head.b1->grad);
    Mat dx;
    matmul_tB(ds, head.w1->value, dx);
    return dx;
}

PooledOutput pooled_decode(const Mat& contextual, const PooledHead& head, PooledCache* cache) {
    if (contextual.rows() < 1) {
        throw ValidationError("pooled_decode: sequence has no attendable tokens");
    }
    PooledCache local;
    PooledCache& c = cache ? *cache : local;
    const int L = contextual.rows(), d = contextual.cols();
    c.h = contextual;
    matmul(contextual, head.w1->value, c.au);
    add_bias(c.au, head.b1->value);
    c.u = Mat(L, d);
    for (std::size_t i = 0; i < c.au.size(); ++i) c.u.data()[i] = std::tanh(c.au.data()[i]);

    c.scores.assign(L, 0.0);
    for (int i = 0; i < L; ++i) c.scores[i] = dot(c.u.row(i), head.ctx->value.row(0), d);
    c.weights = softmax(c.scores);

    c.summary = Mat(1, d);
    for (int i = 0; i < L; ++i) axpy(c.weights[i], contextual.row(i), c.summary.row(0), d);

    matmul(c.summary, head.w2->value, c.a2);
    add_bias(c.a2, head.b2->value);
    c.h2 = Mat(1, c.a2.cols());
    for (std::size_t i = 0; i < c.a2.size(); ++i) c.h2.data()[i] = swish(c.a2.data()[i]);

    PooledOutput out;
    matmul(c.h2, head.w3->value, out.logits);
    add_bias(out.logits, head.b3->value);
    out.summary = c.summary;
    return out;
}

Mat pooled_decode_backward(const PooledHead& head, const PooledCache& cache, const Mat& d_logits,
                           const Mat* d_summary_extra) {
    const int L = cache.h.rows(), d = cache.h.cols();

    matmul_tA(cache.h2, d_logits, head.w3->grad, /*accumulate=*/true);
    bias_grad(d_logits, head.b3->grad);
    Mat dh2;
    matmul_tB(d_logits, head.w3->value, dh2);
    for (std::size_t i = 0; i < dh2.size(); ++i) dh2.data()[i] *= swish_grad(cache.a2.data()[i]);
    matmul_tA(cache.summary, dh2, head.w2->grad, /*accumulate=*/true);
    bias_grad(dh2, head.b2->grad);
    Mat d_summary;
    matmul_tB(dh2, head.w2->value, d_summary);
    if (d_summary_extra) add_inplace(d_summary, *d_summary_extra);

    // summary = sum_i w_i h_i
    Mat dh(L, d);
    Vec dw(L, 0.0);
    for (int i = 0; i < L; ++i) {
        dw[i] = dot(cache.h.row(i), d_summary.row(0), d);
        axpy(cache.weights[i], d_summary.row(0), dh.row(i), d);
    }
    // softmax over scores
    real inner = 0.0;
    for (int i = 0; i < L; ++i) inner += cache.weights[i] * dw[i];
    Vec dscore(L);
    for (int i = 0; i < L; ++i) dscore[i] = cache.weights[i] * (dw[i] - inner);

    // score_i = u_i . ctx
    Mat dau(L, d);
    for (int i = 0; i < L; ++i) {
        axpy(dscore[i], cache.u.row(i), head.ctx->grad.row(0), d);
        const real* ctxv = head.ctx->value.row(0);
        const real* ui = cache.u.row(i);
        real* dst = dau.row(i);
        for (int k = 0; k < d; ++k) dst[k] = dscore[i] * ctxv[k] * (1.0 - ui[k] * ui[k]);
    }
    matmul_tA(cache.h, dau, head.w1->grad, /*accumulate=*/true);
    bias_grad(dau, head.b1->grad);
    Mat dh1;
    matmul_tB(dau, head.w1->value, dh1);
    add_inplace(dh, dh1);
    return dh;
}

Vec pooled_tail_gradient(const PooledHead& head, const PooledCache& cache, int cls) {
    const int d = cache.summary.cols();
    Mat d_logits(1, head.w3->value.cols());
    d_logits(0, cls) = 1.0;
    Mat dh2;
    matmul_tB(d_logits, head.w3->value, dh2);
    for (std::size_t i = 0; i < dh2.size(); ++i) dh2.data()[i] *= swish_grad(cache.a2.data()[i]);
    Mat d_summary;
    matmul_tB(dh2, head.w2->value, d_summary);
    Vec out(d);
    for (int k = 0; k < d; ++k) out[k] = d_summary(0, k);
    return out;
}

Vec pooled_attention_weights(const Mat& contextual, const PooledHead& head) {
    PooledCache cache;
    pooled_decode(contextual, head, &cache);
    return cache.weights;
}

}  // namespace lifeseq
