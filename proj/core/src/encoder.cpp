#include "lifeseq/encoder.hpp"

#include <cmath>

#include "lifeseq/common.hpp"
#include "lifeseq/rng.hpp"

namespace lifeseq {

namespace {

constexpr real kNormEps = 1e-12;

void add_bias(Mat& x, const Mat& bias) {
    const int n = x.cols();
    for (int i = 0; i < x.rows(); ++i) axpy(1.0, bias.row(0), x.row(i), n);
}

void bias_grad(const Mat& d, Mat& db) {
    const int n = d.cols();
    for (int i = 0; i < d.rows(); ++i) axpy(1.0, d.row(i), db.row(0), n);
}

Mat slice_cols(const Mat& x, int c0, int n) {
    Mat out(x.rows(), n);
    for (int i = 0; i < x.rows(); ++i) {
        const real* src = x.row(i) + c0;
        real* dst = out.row(i);
        for (int c = 0; c < n; ++c) dst[c] = src[c];
    }
    return out;
}

void paste_cols(const Mat& part, Mat& x, int c0) {
    for (int i = 0; i < x.rows(); ++i) {
        const real* src = part.row(i);
        real* dst = x.row(i) + c0;
        for (int c = 0; c < part.cols(); ++c) dst[c] = src[c];
    }
}

real swish(real x) { return x / (1.0 + std::exp(-x)); }
real swish_grad(real x) {
    const real s = 1.0 / (1.0 + std::exp(-x));
    return s + x * s * (1.0 - s);
}

real mat_inner(const Mat& a, const Mat& b) {
    return dot(a.data(), b.data(), static_cast<int>(a.size()));
}

}  // namespace

void EncoderConfig::validate() const {
    if (n_heads < 1 || d < 1 || n_layers < 0 || pff_hidden < 1) {
        throw ValidationError("encoder config: dimensions must be positive");
    }
    if (n_local_heads < 0 || n_local_heads > n_heads) {
        throw ValidationError("encoder config: n_local_heads must lie in [0, n_heads]");
    }
    if (d % n_heads != 0) {
        throw ValidationError("encoder config: hidden size " + std::to_string(d) +
                              " is not divisible by " + std::to_string(n_heads) + " heads");
    }
    if (n_random_features < 1) {
        throw ValidationError("encoder config: n_random_features must be >= 1");
    }
    if (local_window < 1) {
        throw ValidationError("encoder config: local_window must be >= 1");
    }
}

FeatureMaps draw_feature_maps(const EncoderConfig& cfg, std::uint64_t seed) {
    FeatureMaps fms;
    const int n_perf = cfg.n_performer_heads();
    fms.maps.reserve(static_cast<std::size_t>(cfg.n_layers) * n_perf);
    for (int l = 0; l < cfg.n_layers; ++l) {
        for (int h = 0; h < n_perf; ++h) {
            fms.maps.push_back(make_performer_feature_map(
                cfg.n_random_features, cfg.head_dim(),
                derive_seed(seed, static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(h))));
        }
    }
    return fms;
}

void scale_norm(const Mat& x, real g, Mat& out, Vec& row_norms) {
    const int L = x.rows(), d = x.cols();
    if (out.rows() != L || out.cols() != d) out = Mat(L, d);
    row_norms.assign(L, 0.0);
    for (int i = 0; i < L; ++i) {
        const real r = std::max(l2_norm(x.row(i), d), kNormEps);
        row_norms[i] = r;
        const real s = g / r;
        const real* src = x.row(i);
        real* dst = out.row(i);
        for (int c = 0; c < d; ++c) dst[c] = s * src[c];
    }
}

void scale_norm_backward(const Mat& x, const Vec& row_norms, real g, const Mat& d_out, Mat& dx_acc,
                         real& dg_acc) {
    const int L = x.rows(), d = x.cols();
    for (int i = 0; i < L; ++i) {
        const real r = row_norms[i];
        const real* xi = x.row(i);
        const real* gi = d_out.row(i);
        const real xdg = dot(xi, gi, d);
        dg_acc += xdg / r;
        real* dst = dx_acc.row(i);
        const real a = g / r;
        const real b = g * xdg / (r * r * r);
        for (int c = 0; c < d; ++c) dst[c] += a * gi[c] - b * xi[c];
    }
}

void pff_forward(const Mat& x, const LayerParams& lp, Mat& a1, Mat& s1, Mat& out) {
    matmul(x, lp.w1->value, a1);
    add_bias(a1, lp.b1->value);
    s1 = Mat(a1.rows(), a1.cols());
    for (std::size_t i = 0; i < a1.size(); ++i) s1.data()[i] = swish(a1.data()[i]);
    matmul(s1, lp.w2->value, out);
    add_bias(out, lp.b2->value);
}

void pff_backward(const Mat& x, const LayerParams& lp, const Mat& a1, const Mat& s1,
                  const Mat& d_out, Mat& dx_acc) {
    matmul_tA(s1, d_out, lp.w2->grad, /*accumulate=*/true);
    bias_grad(d_out, lp.b2->grad);
    Mat ds1;
    matmul_tB(d_out, lp.w2->value, ds1);
    for (std::size_t i = 0; i < ds1.size(); ++i) ds1.data()[i] *= swish_grad(a1.data()[i]);
    matmul_tA(x, ds1, lp.w1->grad, /*accumulate=*/true);
    bias_grad(ds1, lp.b1->grad);
    Mat dx;
    matmul_tB(ds1, lp.w1->value, dx);
    add_inplace(dx_acc, dx);
}

Mat encoder_block_forward(const Mat& x, const LayerParams& lp, const EncoderConfig& cfg,
                          const FeatureMaps& fms, int layer, BlockCache& cache) {
    const int L = x.rows();
    const int dh = cfg.head_dim();
    const int n_perf = cfg.n_performer_heads();
    const KeyMask no_mask;

    cache.x_in = x;
    scale_norm(x, lp.norm_attn_g->scalar(), cache.n1, cache.r1);

    matmul(cache.n1, lp.wq->value, cache.Qf);
    add_bias(cache.Qf, lp.bq->value);
    matmul(cache.n1, lp.wk->value, cache.Kf);
    add_bias(cache.Kf, lp.bk->value);
    matmul(cache.n1, lp.wv->value, cache.Vf);
    add_bias(cache.Vf, lp.bv->value);

    cache.heads.assign(cfg.n_heads, HeadCache{});
    cache.headcat = Mat(L, cfg.d);
    for (int h = 0; h < cfg.n_heads; ++h) {
        HeadCache& hc = cache.heads[h];
        hc.Q = slice_cols(cache.Qf, h * dh, dh);
        hc.K = slice_cols(cache.Kf, h * dh, dh);
        hc.V = slice_cols(cache.Vf, h * dh, dh);
        if (h < cfg.n_local_heads) {
            local_softmax_attention(hc.Q, hc.K, hc.V, cfg.local_window, no_mask, hc.out,
                                    &hc.weights);
        } else {
            performer_attention(hc.Q, hc.K, hc.V, fms.at(layer, h - cfg.n_local_heads, n_perf),
                                no_mask, hc.out, &hc.perf);
        }
        paste_cols(hc.out, cache.headcat, h * dh);
    }

    matmul(cache.headcat, lp.wo->value, cache.attn_out);
    add_bias(cache.attn_out, lp.bo->value);

    cache.x2 = x;
    add_inplace(cache.x2, cache.attn_out, lp.gate_attn->scalar());

    scale_norm(cache.x2, lp.norm_pff_g->scalar(), cache.n2, cache.r2);
    pff_forward(cache.n2, lp, cache.a1, cache.s1, cache.pff_out);

    Mat y = cache.x2;
    add_inplace(y, cache.pff_out, lp.gate_pff->scalar());
    return y;
}

Mat encoder_block_backward(const Mat& d_y, const LayerParams& lp, const EncoderConfig& cfg,
                           const FeatureMaps& fms, int layer, const BlockCache& cache) {
    const int L = d_y.rows();
    const int dh = cfg.head_dim();
    const int n_perf = cfg.n_performer_heads();
    const KeyMask no_mask;

    // y = x2 + gate_pff * pff(n2)
    lp.gate_pff->grad(0, 0) += mat_inner(d_y, cache.pff_out);
    Mat d_pff = d_y;
    scale_inplace(d_pff, lp.gate_pff->scalar());

    Mat dx2 = d_y;
    Mat dn2(L, cfg.d);
    dn2.zero();
    pff_backward(cache.n2, lp, cache.a1, cache.s1, d_pff, dn2);
    real dg2 = 0.0;
    scale_norm_backward(cache.x2, cache.r2, lp.norm_pff_g->scalar(), dn2, dx2, dg2);
    lp.norm_pff_g->grad(0, 0) += dg2;

    // x2 = x + gate_attn * attn(n1)
    lp.gate_attn->grad(0, 0) += mat_inner(dx2, cache.attn_out);
    Mat d_attn = dx2;
    scale_inplace(d_attn, lp.gate_attn->scalar());

    matmul_tA(cache.headcat, d_attn, lp.wo->grad, /*accumulate=*/true);
    bias_grad(d_attn, lp.bo->grad);
    Mat d_headcat;
    matmul_tB(d_attn, lp.wo->value, d_headcat);

    Mat dQf(L, cfg.d), dKf(L, cfg.d), dVf(L, cfg.d);
    for (int h = 0; h < cfg.n_heads; ++h) {
        const HeadCache& hc = cache.heads[h];
        const Mat d_out_h = slice_cols(d_headcat, h * dh, dh);
        Mat dQ, dK, dV;
        if (h < cfg.n_local_heads) {
            softmax_attention_backward(hc.Q, hc.K, hc.V, hc.weights, d_out_h, dQ, dK, dV);
        } else {
            performer_attention_backward(fms.at(layer, h - cfg.n_local_heads, n_perf), no_mask,
                                         hc.perf, hc.V, d_out_h, dQ, dK, dV);
        }
        paste_cols(dQ, dQf, h * dh);
        paste_cols(dK, dKf, h * dh);
        paste_cols(dV, dVf, h * dh);
    }

    matmul_tA(cache.n1, dQf, lp.wq->grad, /*accumulate=*/true);
    bias_grad(dQf, lp.bq->grad);
    matmul_tA(cache.n1, dKf, lp.wk->grad, /*accumulate=*/true);
    bias_grad(dKf, lp.bk->grad);
    matmul_tA(cache.n1, dVf, lp.wv->grad, /*accumulate=*/true);
    bias_grad(dVf, lp.bv->grad);

    Mat dn1;
    matmul_tB(dQf, lp.wq->value, dn1);
    Mat tmp;
    matmul_tB(dKf, lp.wk->value, tmp);
    add_inplace(dn1, tmp);
    matmul_tB(dVf, lp.wv->value, tmp);
    add_inplace(dn1, tmp);

    Mat dx = dx2;
    real dg1 = 0.0;
    scale_norm_backward(cache.x_in, cache.r1, lp.norm_attn_g->scalar(), dn1, dx, dg1);
    lp.norm_attn_g->grad(0, 0) += dg1;
    return dx;
}

Mat encoder_forward(const Mat& x, const std::vector<LayerParams>& layers, const EncoderConfig& cfg,
                    const FeatureMaps& fms, EncoderCache& cache) {
    cache.blocks.assign(layers.size(), BlockCache{});
    Mat h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        h = encoder_block_forward(h, layers[l], cfg, fms, static_cast<int>(l), cache.blocks[l]);
    }
    return h;
}

Mat encoder_backward(const Mat& d_y, const std::vector<LayerParams>& layers,
                     const EncoderConfig& cfg, const FeatureMaps& fms, const EncoderCache& cache) {
    Mat g = d_y;
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
        g = encoder_block_backward(g, layers[l], cfg, fms, l, cache.blocks[l]);
    }
    return g;
}

}  // namespace lifeseq
