#include "lifeseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "lifeseq/rng.hpp"

namespace lifeseq {

namespace {

struct PuCounts {
    long n = 0, np = 0, nu = 0;
    long pos_pred1 = 0;  // labeled positives predicted positive
    long unl_pred1 = 0;  // unlabeled predicted positive
};

PuCounts count_pu(const PuPredictions& preds, real threshold) {
    if (preds.scores.empty() || preds.scores.size() != preds.labels.size()) {
        throw ValidationError("predictions: scores/labels must be nonempty and aligned");
    }
    PuCounts c;
    c.n = static_cast<long>(preds.scores.size());
    for (std::size_t i = 0; i < preds.scores.size(); ++i) {
        const bool pred1 = preds.scores[i] >= threshold;
        if (preds.labels[i]) {
            ++c.np;
            c.pos_pred1 += pred1 ? 1 : 0;
        } else {
            ++c.nu;
            c.unl_pred1 += pred1 ? 1 : 0;
        }
    }
    return c;
}

struct Rates {
    real tp, fp, tn, fn, tpr, fpr;
};

// SCAR correction: alpha is the positive fraction hidden in the unlabeled
// set, implied by the supplied prevalence. alpha = 0 reduces every corrected
// metric to its plain unlabeled-as-negative value.
Rates corrected_rates(const PuCounts& c, std::optional<real> prevalence) {
    const real pi = prevalence.value_or(static_cast<real>(c.np) / static_cast<real>(c.n));
    const real s1 = c.np > 0 ? static_cast<real>(c.pos_pred1) / c.np : 0.0;
    const real u1 = c.nu > 0 ? static_cast<real>(c.unl_pred1) / c.nu : 0.0;
    real alpha = 0.0;
    if (c.nu > 0) {
        alpha = (pi * static_cast<real>(c.n) - static_cast<real>(c.np)) / static_cast<real>(c.nu);
        alpha = std::clamp(alpha, 0.0, 1.0 - 1e-12);
    }
    real fpr = (u1 - alpha * s1) / (1.0 - alpha);
    fpr = std::clamp(fpr, 0.0, 1.0);
    Rates r;
    r.tpr = s1;
    r.fpr = fpr;
    r.tp = pi * s1;
    r.fn = pi * (1.0 - s1);
    r.fp = (1.0 - pi) * fpr;
    r.tn = (1.0 - pi) * (1.0 - fpr);
    return r;
}

real mcc_from(real tp, real fp, real tn, real fn) {
    const real denom = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    if (denom <= 0.0) {
        std::cerr << "[metrics] degenerate confusion matrix, reporting MCC = 0\n";
        return 0.0;
    }
    return (tp * tn - fp * fn) / denom;
}

}  // namespace

real cmcc(const PuPredictions& preds, real threshold, std::optional<real> positive_prevalence) {
    const PuCounts c = count_pu(preds, threshold);
    const Rates r = corrected_rates(c, positive_prevalence);
    return mcc_from(r.tp, r.fp, r.tn, r.fn);
}

real plain_mcc(const PuPredictions& preds, real threshold) {
    const PuCounts c = count_pu(preds, threshold);
    const real tp = static_cast<real>(c.pos_pred1);
    const real fn = static_cast<real>(c.np - c.pos_pred1);
    const real fp = static_cast<real>(c.unl_pred1);
    const real tn = static_cast<real>(c.nu - c.unl_pred1);
    return mcc_from(tp, fp, tn, fn);
}

real aul(const PuPredictions& preds) {
    const long n = static_cast<long>(preds.scores.size());
    if (n == 0 || preds.labels.size() != preds.scores.size()) {
        throw ValidationError("aul: scores/labels must be nonempty and aligned");
    }
    long npos = 0;
    for (auto l : preds.labels) npos += l;
    if (npos == 0) throw ValidationError("aul: needs at least one positive sample");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (preds.scores[a] != preds.scores[b]) return preds.scores[a] > preds.scores[b];
        return a < b;
    });

    // Cumulative-gains curve, trapezoid-integrated; tie groups are processed
    // as straight segments which averages all orderings within the group.
    real area = 0.0;
    real cum_pos = 0.0;
    long i = 0;
    while (i < n) {
        long j = i;
        long group_pos = 0;
        while (j < n && preds.scores[order[j]] == preds.scores[order[i]]) {
            group_pos += preds.labels[order[j]] ? 1 : 0;
            ++j;
        }
        const real y0 = cum_pos / static_cast<real>(npos);
        const real y1 = (cum_pos + static_cast<real>(group_pos)) / static_cast<real>(npos);
        area += 0.5 * (y0 + y1) * static_cast<real>(j - i) / static_cast<real>(n);
        cum_pos += static_cast<real>(group_pos);
        i = j;
    }
    return area;
}

CorrectedRates corrected_accuracy_f1(const PuPredictions& preds, real threshold,
                                     std::optional<real> positive_prevalence) {
    const PuCounts c = count_pu(preds, threshold);
    const Rates r = corrected_rates(c, positive_prevalence);
    CorrectedRates out;
    out.balanced_accuracy = 0.5 * (r.tpr + (1.0 - r.fpr));
    const real denom = 2.0 * r.tp + r.fp + r.fn;
    out.f1 = denom > 0.0 ? 2.0 * r.tp / denom : 0.0;
    return out;
}

real cqk(const std::vector<int>& truth, const std::vector<int>& predicted, int n_levels) {
    if (truth.empty() || truth.size() != predicted.size()) {
        throw ValidationError("cqk: label vectors must be nonempty and aligned");
    }
    const int k = n_levels;
    std::vector<real> obs(static_cast<std::size_t>(k) * k, 0.0);
    Vec mt(k, 0.0), mp(k, 0.0);
    const real n = static_cast<real>(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t < 0 || t >= k || p < 0 || p >= k) {
            throw ValidationError("cqk: level out of range");
        }
        obs[static_cast<std::size_t>(t) * k + p] += 1.0;
        mt[t] += 1.0;
        mp[p] += 1.0;
    }
    real num = 0.0, den = 0.0;
    for (int t = 0; t < k; ++t) {
        for (int p = 0; p < k; ++p) {
            const real w = static_cast<real>((t - p) * (t - p)) /
                           static_cast<real>((k - 1) * (k - 1));
            num += w * obs[static_cast<std::size_t>(t) * k + p];
            den += w * mt[t] * mp[p] / n;
        }
    }
    if (num == 0.0) return 1.0;  // perfect agreement, even if degenerate
    if (den == 0.0) return 0.0;
    return 1.0 - num / den;
}

real quantile(Vec values, real q) {
    if (values.empty()) throw ValidationError("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const real h = (static_cast<real>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const real frac = h - std::floor(h);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

BootstrapCi bootstrap_ci(const PuPredictions& preds,
                         const std::function<real(const PuPredictions&)>& metric, int n_resamples,
                         real level, bool stratified, std::uint64_t seed) {
    const std::size_t n = preds.scores.size();
    std::vector<std::size_t> pos_idx, unl_idx;
    for (std::size_t i = 0; i < n; ++i) (preds.labels[i] ? pos_idx : unl_idx).push_back(i);

    BootstrapCi out;
    out.resample_values.reserve(n_resamples);
    for (int r = 0; r < n_resamples; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        PuPredictions sample;
        sample.scores.reserve(n);
        sample.labels.reserve(n);
        auto draw_from = [&](const std::vector<std::size_t>& src, std::size_t count) {
            for (std::size_t k = 0; k < count; ++k) {
                const std::size_t i = src[rng.below(src.size())];
                sample.scores.push_back(preds.scores[i]);
                sample.labels.push_back(preds.labels[i]);
            }
        };
        if (stratified && !pos_idx.empty() && !unl_idx.empty()) {
            draw_from(pos_idx, pos_idx.size());
            draw_from(unl_idx, unl_idx.size());
        } else {
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), 0);
            draw_from(all, n);
        }
        out.resample_values.push_back(metric(sample));
    }
    const real tail = (1.0 - level) / 2.0;
    out.low = quantile(out.resample_values, tail);
    out.high = quantile(out.resample_values, 1.0 - tail);
    out.median = quantile(out.resample_values, 0.5);
    return out;
}

}  // namespace lifeseq
