#include "lifeseq/attention.hpp"

#include <cmath>

#include "lifeseq/common.hpp"
#include "lifeseq/rng.hpp"

namespace lifeseq {

namespace {

bool masked(const KeyMask& mask, int j) { return !mask.empty() && mask[j] == 0; }

void windowed_attention(const Mat& Q, const Mat& K, const Mat& V, int half, const KeyMask& mask,
                        Mat& out, Mat* weights) {
    const int L = Q.rows();
    const int dh = Q.cols();
    const real inv_sqrt = 1.0 / std::sqrt(static_cast<real>(dh));
    if (out.rows() != L || out.cols() != dh) out = Mat(L, dh);
    out.zero();
    if (weights) {
        if (weights->rows() != L || weights->cols() != L) *weights = Mat(L, L);
        weights->zero();
    }
    std::vector<real> scores(L);
    for (int i = 0; i < L; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(L - 1, i + half);
        real mx = -1e300;
        for (int j = lo; j <= hi; ++j) {
            if (masked(mask, j)) continue;
            scores[j] = dot(Q.row(i), K.row(j), dh) * inv_sqrt;
            mx = std::max(mx, scores[j]);
        }
        if (mx == -1e300) continue;  // fully masked row: zero output by contract
        real z = 0.0;
        for (int j = lo; j <= hi; ++j) {
            if (masked(mask, j)) continue;
            scores[j] = std::exp(scores[j] - mx);
            z += scores[j];
        }
        real* orow = out.row(i);
        for (int j = lo; j <= hi; ++j) {
            if (masked(mask, j)) continue;
            const real w = scores[j] / z;
            if (weights) (*weights)(i, j) = w;
            axpy(w, V.row(j), orow, dh);
        }
    }
}

}  // namespace

void softmax_attention(const Mat& Q, const Mat& K, const Mat& V, const KeyMask& mask, Mat& out,
                       Mat* weights) {
    windowed_attention(Q, K, V, Q.rows(), mask, out, weights);
}

void local_softmax_attention(const Mat& Q, const Mat& K, const Mat& V, int window,
                             const KeyMask& mask, Mat& out, Mat* weights) {
    if (window < 1) throw ValidationError("local attention window must be >= 1");
    windowed_attention(Q, K, V, window / 2, mask, out, weights);
}

void softmax_attention_backward(const Mat& Q, const Mat& K, const Mat& V, const Mat& weights,
                                const Mat& d_out, Mat& dQ, Mat& dK, Mat& dV) {
    const int L = Q.rows();
    const int dh = Q.cols();
    const real inv_sqrt = 1.0 / std::sqrt(static_cast<real>(dh));
    if (dQ.rows() != L || dQ.cols() != dh) dQ = Mat(L, dh);
    if (dK.rows() != L || dK.cols() != dh) dK = Mat(L, dh);
    if (dV.rows() != L || dV.cols() != dh) dV = Mat(L, dh);
    dQ.zero();
    dK.zero();
    dV.zero();
    std::vector<real> dw(L);
    for (int i = 0; i < L; ++i) {
        const real* wrow = weights.row(i);
        const real* grow = d_out.row(i);
        real mean = 0.0;  // sum_k w_k * dw_k
        for (int j = 0; j < L; ++j) {
            if (wrow[j] == 0.0) {
                dw[j] = 0.0;
                continue;
            }
            dw[j] = dot(V.row(j), grow, dh);
            axpy(wrow[j], grow, dV.row(j), dh);
            mean += wrow[j] * dw[j];
        }
        for (int j = 0; j < L; ++j) {
            if (wrow[j] == 0.0) continue;
            const real da = wrow[j] * (dw[j] - mean) * inv_sqrt;
            axpy(da, K.row(j), dQ.row(i), dh);
            axpy(da, Q.row(i), dK.row(j), dh);
        }
    }
}

PerformerFeatureMap make_performer_feature_map(int n_features, int head_dim, std::uint64_t seed) {
    if (n_features < 1) throw ValidationError("performer feature count must be >= 1");
    Rng rng(derive_seed(seed, "favor"));
    Mat W(n_features, head_dim);
    for (std::size_t i = 0; i < W.size(); ++i) W.data()[i] = rng.normal();
    // Orthogonalize each d_h block (Gram-Schmidt, one re-orthogonalization
    // pass), then give rows chi(d_h)-distributed lengths via fresh draws.
    for (int base = 0; base < n_features; base += head_dim) {
        const int block = std::min(head_dim, n_features - base);
        for (int i = 0; i < block; ++i) {
            real* wi = W.row(base + i);
            for (int pass = 0; pass < 2; ++pass) {
                for (int j = 0; j < i; ++j) {
                    const real* wj = W.row(base + j);
                    axpy(-dot(wi, wj, head_dim), wj, wi, head_dim);
                }
            }
            const real n = l2_norm(wi, head_dim);
            if (n < 1e-12) throw ComputeError("performer feature map: degenerate Gaussian block");
            for (int c = 0; c < head_dim; ++c) wi[c] /= n;
        }
    }
    for (int i = 0; i < n_features; ++i) {
        real sq = 0.0;
        for (int c = 0; c < head_dim; ++c) {
            const real g = rng.normal();
            sq += g * g;
        }
        const real len = std::sqrt(sq);
        for (int c = 0; c < head_dim; ++c) W(i, c) *= len;
    }
    return PerformerFeatureMap{std::move(W)};
}

void performer_attention(const Mat& Q, const Mat& K, const Mat& V, const PerformerFeatureMap& fm,
                         const KeyMask& mask, Mat& out, PerformerCache* cache) {
    const int L = Q.rows();
    const int dh = Q.cols();
    const int r = fm.projection.rows();
    const real scale = std::pow(static_cast<real>(dh), -0.25);
    const real inv_sqrt_r = 1.0 / std::sqrt(static_cast<real>(r));

    PerformerCache local;
    PerformerCache& c = cache ? *cache : local;
    c.Qs = Mat(L, dh);
    c.Ks = Mat(L, dh);
    for (std::size_t i = 0; i < c.Qs.size(); ++i) c.Qs.data()[i] = Q.data()[i] * scale;
    for (std::size_t i = 0; i < c.Ks.size(); ++i) c.Ks.data()[i] = K.data()[i] * scale;

    // z = x W^T - |x|^2 / 2, exponentiated with a detached stabilizer: per-row
    // max for queries, one global max for keys (a shift shared by all keys
    // cancels in the normalized output, so detaching it is exact).
    matmul_tB(c.Qs, fm.projection, c.Qp);
    matmul_tB(c.Ks, fm.projection, c.Kp);
    for (int i = 0; i < L; ++i) {
        const real half_sq = 0.5 * dot(c.Qs.row(i), c.Qs.row(i), dh);
        real* row = c.Qp.row(i);
        real mx = -1e300;
        for (int f = 0; f < r; ++f) {
            row[f] -= half_sq;
            mx = std::max(mx, row[f]);
        }
        for (int f = 0; f < r; ++f) row[f] = std::exp(row[f] - mx) * inv_sqrt_r;
    }
    real kmax = -1e300;
    for (int j = 0; j < L; ++j) {
        if (masked(mask, j)) continue;
        const real half_sq = 0.5 * dot(c.Ks.row(j), c.Ks.row(j), dh);
        real* row = c.Kp.row(j);
        for (int f = 0; f < r; ++f) {
            row[f] -= half_sq;
            kmax = std::max(kmax, row[f]);
        }
    }
    for (int j = 0; j < L; ++j) {
        real* row = c.Kp.row(j);
        if (masked(mask, j)) {
            for (int f = 0; f < r; ++f) row[f] = 0.0;  // masked keys contribute nothing
        } else {
            for (int f = 0; f < r; ++f) row[f] = std::exp(row[f] - kmax) * inv_sqrt_r;
        }
    }

    matmul_tA(c.Kp, V, c.kv);  // r x dh
    c.ksum.assign(r, 0.0);
    for (int j = 0; j < L; ++j) {
        if (masked(mask, j)) continue;
        const real* row = c.Kp.row(j);
        for (int f = 0; f < r; ++f) c.ksum[f] += row[f];
    }

    matmul(c.Qp, c.kv, c.out);
    c.denom.assign(L, 0.0);
    for (int i = 0; i < L; ++i) {
        const real d = dot(c.Qp.row(i), c.ksum.data(), r);
        if (d < 1e-8) {
            throw ComputeError("performer attention: normalizer collapsed below 1e-8 at row " +
                               std::to_string(i));
        }
        c.denom[i] = d;
        real* row = c.out.row(i);
        for (int k = 0; k < dh; ++k) row[k] /= d;
    }
    out = c.out;
}

void performer_attention_backward(const PerformerFeatureMap& fm, const KeyMask& mask,
                                  const PerformerCache& c, const Mat& V, const Mat& d_out,
                                  Mat& dQ, Mat& dK, Mat& dV) {
    const int L = c.Qp.rows();
    const int r = c.Qp.cols();
    const int dh = V.cols();
    const real scale = std::pow(static_cast<real>(dh), -0.25);

    Mat dN(L, dh);
    Vec dD(L, 0.0);
    for (int i = 0; i < L; ++i) {
        const real inv_d = 1.0 / c.denom[i];
        const real* g = d_out.row(i);
        const real* o = c.out.row(i);
        real* dn = dN.row(i);
        real acc = 0.0;
        for (int k = 0; k < dh; ++k) {
            dn[k] = g[k] * inv_d;
            acc += g[k] * o[k];
        }
        dD[i] = -acc * inv_d;
    }

    // N = Q' (K'^T V), D = Q' (K'^T 1)
    Mat dQp(L, r);
    matmul_tB(dN, c.kv, dQp);  // dN * kv^T
    for (int i = 0; i < L; ++i) axpy(dD[i], c.ksum.data(), dQp.row(i), r);

    Mat dKv;  // r x dh
    matmul_tA(c.Qp, dN, dKv);
    Vec ds(r, 0.0);
    for (int i = 0; i < L; ++i) {
        const real* q = c.Qp.row(i);
        for (int f = 0; f < r; ++f) ds[f] += q[f] * dD[i];
    }

    Mat dKp(L, r);
    matmul_tB(V, dKv, dKp);  // V * dKv^T
    for (int j = 0; j < L; ++j) {
        if (masked(mask, j)) {
            for (int f = 0; f < r; ++f) dKp(j, f) = 0.0;
            continue;
        }
        axpy(1.0, ds.data(), dKp.row(j), r);
    }

    // dV = K' dKv  (masked rows of K' are zero, so their dV rows come out zero)
    matmul(c.Kp, dKv, dV);

    // Through the feature map: phi'(z) = phi(z); dz = dPhi .* Phi;
    // dx = dz W - (sum_f dz_f) x.
    auto back_features = [&](const Mat& P, const Mat& dP, const Mat& Xs, Mat& dX) {
        if (dX.rows() != L || dX.cols() != dh) dX = Mat(L, dh);
        Mat dz(L, r);
        Vec rowsum(L, 0.0);
        for (int i = 0; i < L; ++i) {
            const real* p = P.row(i);
            const real* dp = dP.row(i);
            real* z = dz.row(i);
            real s = 0.0;
            for (int f = 0; f < r; ++f) {
                z[f] = dp[f] * p[f];
                s += z[f];
            }
            rowsum[i] = s;
        }
        matmul(dz, fm.projection, dX);
        for (int i = 0; i < L; ++i) axpy(-rowsum[i], Xs.row(i), dX.row(i), dh);
        scale_inplace(dX, scale);
    };
    back_features(c.Qp, dQp, c.Qs, dQ);
    back_features(c.Kp, dKp, c.Ks, dK);
}

}  // namespace lifeseq
