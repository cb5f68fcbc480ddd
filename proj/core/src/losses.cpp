#include "lifeseq/losses.hpp"

#include <algorithm>
#include <cmath>

#include "lifeseq/common.hpp"

namespace lifeseq {

namespace {

constexpr real kLogFloor = 1e-300;

real safe_log(real x) { return std::log(std::max(x, kLogFloor)); }

real sigmoid(real x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Vec softmax(const Vec& logits) {
    real mx = logits[0];
    for (real z : logits) mx = std::max(mx, z);
    Vec p(logits.size());
    real sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (real& v : p) v /= sum;
    return p;
}

Vec softmax_backward(const Vec& probs, const Vec& d_probs) {
    real inner = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) inner += probs[i] * d_probs[i];
    Vec dz(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) dz[i] = probs[i] * (d_probs[i] - inner);
    return dz;
}

Vec sigsoftmax(const Vec& logits) {
    real mx = logits[0];
    for (real z : logits) mx = std::max(mx, z);
    Vec p(logits.size());
    real sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx) * sigmoid(logits[i]);
        sum += p[i];
    }
    for (real& v : p) v /= sum;
    return p;
}

Vec sigsoftmax_backward(const Vec& logits, const Vec& probs, const Vec& d_probs) {
    // dq_i/dz_i = q_i (2 - sigmoid(z_i)); the normalizer gives the usual
    // projection against the probability vector.
    real inner = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) inner += probs[i] * d_probs[i];
    Vec dz(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        dz[i] = probs[i] * (2.0 - sigmoid(logits[i])) * (d_probs[i] - inner);
    }
    return dz;
}

real cross_entropy(const Vec& onehot, const Vec& probs) {
    real loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (onehot[i] != 0.0) loss -= onehot[i] * safe_log(probs[i]);
    }
    return loss;
}

Vec cross_entropy_grad(const Vec& onehot, const Vec& probs) {
    Vec g(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (onehot[i] != 0.0) g[i] = -onehot[i] / std::max(probs[i], kLogFloor);
    }
    return g;
}

real ce_label_smoothing(const Vec& onehot, const Vec& probs, const Vec& weights, real alpha) {
    const real n = static_cast<real>(probs.size());
    real loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const real target = (1.0 - alpha) * onehot[i] + alpha / n;
        loss -= weights[i] * target * safe_log(probs[i]);
    }
    return loss;
}

Vec ce_label_smoothing_grad(const Vec& onehot, const Vec& probs, const Vec& weights, real alpha) {
    const real n = static_cast<real>(probs.size());
    Vec g(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const real target = (1.0 - alpha) * onehot[i] + alpha / n;
        g[i] = -weights[i] * target / std::max(probs[i], kLogFloor);
    }
    return g;
}

real cdw_ce(int true_level, const Vec& probs, real alpha) {
    real loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const int dist = std::abs(static_cast<int>(i) - true_level);
        if (dist == 0) continue;  // |y - y|^alpha = 0
        loss -= safe_log(1.0 - probs[i]) * std::pow(static_cast<real>(dist), alpha);
    }
    return loss;
}

Vec cdw_ce_grad(int true_level, const Vec& probs, real alpha) {
    Vec g(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const int dist = std::abs(static_cast<int>(i) - true_level);
        if (dist == 0) continue;
        g[i] = std::pow(static_cast<real>(dist), alpha) / std::max(1.0 - probs[i], kLogFloor);
    }
    return g;
}

real focal(const Vec& onehot, const Vec& probs, real gamma) {
    real loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (onehot[i] == 0.0) continue;
        loss -= onehot[i] * std::pow(1.0 - probs[i], gamma) * safe_log(probs[i]);
    }
    return loss;
}

Vec focal_grad(const Vec& onehot, const Vec& probs, real gamma) {
    Vec g(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (onehot[i] == 0.0) continue;
        const real p = probs[i];
        const real one_m = std::max(1.0 - p, 0.0);
        // d/dp [-(1-p)^g log p] = g (1-p)^(g-1) log p - (1-p)^g / p
        g[i] = onehot[i] * (gamma * std::pow(one_m, gamma - 1.0) * safe_log(p) -
                            std::pow(one_m, gamma) / std::max(p, kLogFloor));
    }
    return g;
}

real combined_personality_loss(int true_level, const Vec& probs,
                               const PersonalityLossConfig& cfg) {
    Vec onehot(probs.size(), 0.0);
    onehot[true_level] = 1.0;
    const Vec w(probs.size(), 1.0);
    return cfg.mix_cdw * cdw_ce(true_level, probs, cfg.cdw_alpha) +
           cfg.mix_focal * focal(onehot, probs, cfg.focal_gamma) +
           cfg.mix_smoothing * ce_label_smoothing(onehot, probs, w, cfg.smoothing_alpha);
}

Vec combined_personality_loss_grad(int true_level, const Vec& probs,
                                   const PersonalityLossConfig& cfg) {
    Vec onehot(probs.size(), 0.0);
    onehot[true_level] = 1.0;
    const Vec w(probs.size(), 1.0);
    Vec g = cdw_ce_grad(true_level, probs, cfg.cdw_alpha);
    for (real& v : g) v *= cfg.mix_cdw;
    const Vec gf = focal_grad(onehot, probs, cfg.focal_gamma);
    const Vec gs = ce_label_smoothing_grad(onehot, probs, w, cfg.smoothing_alpha);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += cfg.mix_focal * gf[i] + cfg.mix_smoothing * gs[i];
    }
    return g;
}

real asymmetric_ce(const Mat& logits, int positive_count, real c) {
    const int n = logits.rows();
    if (positive_count <= 0 || positive_count >= n) {
        throw ValidationError("asymmetric_ce: batch needs both positive and unlabeled samples");
    }
    if (c < 0.0) throw ValidationError("asymmetric_ce: c must be >= 0");
    real pos_term = 0.0, unl_term = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec z{logits(i, 0), logits(i, 1)};
        if (i < positive_count) {
            pos_term -= safe_log(sigsoftmax(z)[1]);
        } else {
            z[1] += c;
            unl_term -= safe_log(sigsoftmax(z)[0]);
        }
    }
    return pos_term / positive_count + unl_term / (n - positive_count);
}

Mat asymmetric_ce_grad(const Mat& logits, int positive_count, real c) {
    const int n = logits.rows();
    if (positive_count <= 0 || positive_count >= n) {
        throw ValidationError("asymmetric_ce: batch needs both positive and unlabeled samples");
    }
    Mat g(n, 2);
    for (int i = 0; i < n; ++i) {
        Vec z{logits(i, 0), logits(i, 1)};
        const bool positive = i < positive_count;
        const real scale = positive ? 1.0 / positive_count : 1.0 / (n - positive_count);
        if (!positive) z[1] += c;
        const Vec p = sigsoftmax(z);
        const int cls = positive ? 1 : 0;
        Vec dp(2, 0.0);
        dp[cls] = -scale / std::max(p[cls], kLogFloor);
        const Vec dz = sigsoftmax_backward(z, p, dp);
        g(i, 0) = dz[0];
        g(i, 1) = dz[1];  // the +c shift is a constant offset, gradient passes through
    }
    return g;
}

}  // namespace lifeseq
