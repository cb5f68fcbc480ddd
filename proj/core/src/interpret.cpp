#include "lifeseq/interpret.hpp"

#include <algorithm>
#include <cmath>

#include "lifeseq/embedder.hpp"
#include "lifeseq/losses.hpp"
#include "lifeseq/rng.hpp"

namespace lifeseq {

Vec saliency(Model& model, const EncodedSequence& seq, int n_samples, real sigma,
             std::uint64_t seed, int target_class) {
    if (n_samples < 1) throw ValidationError("saliency: n_samples must be >= 1");
    const Vec mean = concept_mean(model.embedder().concept_emb->value);
    const FeatureMaps& fms = model.eval_feature_maps();
    const int d = model.hidden();

    // Clean pass decides the class under explanation.
    auto fwd = model.forward_sequence(seq, fms, mean);
    PooledCache cache;
    PooledOutput out = pooled_decode(fwd.h, model.pooled(), &cache);
    int cls = target_class;
    if (cls < 0) cls = out.logits(0, 1) > out.logits(0, 0) ? 1 : 0;

    Vec scores(static_cast<std::size_t>(seq.max_len), 0.0);
    Rng rng(derive_seed(seed, "saliency"));
    for (int s = 0; s < n_samples; ++s) {
        Mat x = fwd.x0;
        if (sigma > 0.0) {
            for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += rng.normal(0.0, sigma);
        }
        EncoderCache enc;
        const Mat h = encoder_forward(x, model.layers(), model.config().enc, fms, enc);
        PooledCache pc;
        pooled_decode(h, model.pooled(), &pc);

        // d(logit_cls)/d(contextual rows), then back to the input embeddings.
        Mat d_logits(1, 2);
        d_logits(0, cls) = 1.0;
        model.store().zero_grads();
        const Mat dh = pooled_decode_backward(model.pooled(), pc, d_logits);
        const Mat dx = encoder_backward(dh, model.layers(), model.config().enc, fms, enc);
        for (int i = 0; i < fwd.len; ++i) {
            real sq = 0.0;
            const real* g = dx.row(i);
            const real* xi = x.row(i);
            for (int c = 0; c < d; ++c) sq += (g[c] * xi[c]) * (g[c] * xi[c]);
            scores[i] += std::sqrt(sq) / n_samples;
        }
    }
    model.store().zero_grads();
    return scores;
}

Vec attention_scores(Model& model, const EncodedSequence& seq) {
    const Vec mean = concept_mean(model.embedder().concept_emb->value);
    const auto fwd = model.forward_sequence(seq, model.eval_feature_maps(), mean);
    const Vec weights = pooled_attention_weights(fwd.h, model.pooled());
    Vec out(static_cast<std::size_t>(seq.max_len), 0.0);
    for (int i = 0; i < fwd.len; ++i) out[i] = weights[i];
    return out;
}

MannWhitneyResult mann_whitney_u(const Vec& a, const Vec& b) {
    if (a.empty() || b.empty()) throw ValidationError("mann_whitney_u: empty sample");
    const std::size_t n1 = a.size(), n2 = b.size();
    real u = 0.0;
    bool any_tie = false;
    for (real x : a) {
        for (real y : b) {
            if (x > y) {
                u += 1.0;
            } else if (x == y) {
                u += 0.5;
                any_tie = true;
            }
        }
    }
    MannWhitneyResult res;
    res.u = u;

    // Exact null distribution by dynamic programming over rank sums; valid
    // without ties and cheap for small samples.
    if (!any_tie && n1 * n2 <= 400) {
        const std::size_t max_u = n1 * n2;
        // count[k][j] = #ways to choose k items with U contribution j
        std::vector<std::vector<real>> count(n1 + 1, std::vector<real>(max_u + 1, 0.0));
        count[0][0] = 1.0;
        const std::size_t n = n1 + n2;
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t k = std::min(i, n1); k >= 1; --k) {
                // the rank-i item contributes (i - k) to U when it is the
                // k-th smallest member of sample a
                const std::size_t add = i - k;
                for (std::size_t j = max_u + 1; j-- > add;) {
                    count[k][j] += count[k - 1][j - add];
                }
            }
        }
        real total = 0.0, extreme = 0.0;
        const real lo = std::min(u, static_cast<real>(max_u) - u);
        for (std::size_t j = 0; j <= max_u; ++j) {
            total += count[n1][j];
            if (static_cast<real>(j) <= lo + 1e-12 ||
                static_cast<real>(j) >= static_cast<real>(max_u) - lo - 1e-12) {
                extreme += count[n1][j];
            }
        }
        res.p_value = std::min(1.0, extreme / total);
        return res;
    }

    // Normal approximation with tie correction.
    Vec pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    real tie_term = 0.0;
    std::size_t i = 0;
    const real n = static_cast<real>(n1 + n2);
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        const real t = static_cast<real>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const real mu = static_cast<real>(n1) * static_cast<real>(n2) / 2.0;
    const real var = static_cast<real>(n1) * static_cast<real>(n2) / 12.0 *
                     ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0.0) {
        res.p_value = 1.0;  // all observations tied
        return res;
    }
    const real diff = std::fabs(u - mu);
    const real z = std::max(diff - 0.5, 0.0) / std::sqrt(var);  // continuity correction
    res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return res;
}

Vec person_summary(Model& model, const EncodedSequence& seq) {
    const Vec mean = concept_mean(model.embedder().concept_emb->value);
    const auto fwd = model.forward_sequence(seq, model.eval_feature_maps(), mean);
    const PooledOutput out = pooled_decode(fwd.h, model.pooled());
    return Vec(out.summary.row(0), out.summary.row(0) + model.hidden());
}

namespace {

struct Logistic {
    Vec w;
    real b = 0.0;
};

// Plain l2-regularized logistic regression trained by SGD; labels in {0,1}.
Logistic fit_logistic(const Mat& x, const std::vector<std::uint8_t>& y, real l2, int epochs,
                      real lr, std::uint64_t seed) {
    const int n = x.rows(), d = x.cols();
    Logistic model;
    model.w.assign(d, 0.0);
    Rng rng(derive_seed(seed, "logistic"));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        for (int i : order) {
            const real z = dot(model.w.data(), x.row(i), d) + model.b;
            const real p = 1.0 / (1.0 + std::exp(-z));
            const real g = p - (y[i] ? 1.0 : 0.0);
            for (int c = 0; c < d; ++c) {
                model.w[c] -= lr * (g * x(i, c) + l2 * model.w[c]);
            }
            model.b -= lr * g;
        }
    }
    return model;
}

real cv_accuracy(const Mat& x, const std::vector<std::uint8_t>& y, real l2, int folds,
                 const TcavConfig& cfg, std::uint64_t seed) {
    const int n = x.rows();
    // Stratified fold assignment.
    std::vector<int> fold(n, 0);
    Rng rng(derive_seed(seed, "cv-folds"));
    std::vector<int> pos, neg;
    for (int i = 0; i < n; ++i) (y[i] ? pos : neg).push_back(i);
    rng.shuffle(pos);
    rng.shuffle(neg);
    for (std::size_t i = 0; i < pos.size(); ++i) fold[pos[i]] = static_cast<int>(i % folds);
    for (std::size_t i = 0; i < neg.size(); ++i) fold[neg[i]] = static_cast<int>(i % folds);

    long correct = 0, total = 0;
    for (int f = 0; f < folds; ++f) {
        std::vector<int> train_idx, test_idx;
        for (int i = 0; i < n; ++i) (fold[i] == f ? test_idx : train_idx).push_back(i);
        Mat xt(static_cast<int>(train_idx.size()), x.cols());
        std::vector<std::uint8_t> yt(train_idx.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) {
            std::copy(x.row(train_idx[i]), x.row(train_idx[i]) + x.cols(),
                      xt.row(static_cast<int>(i)));
            yt[i] = y[train_idx[i]];
        }
        const Logistic m =
            fit_logistic(xt, yt, l2, cfg.logistic_epochs, cfg.logistic_lr, derive_seed(seed, f));
        for (int i : test_idx) {
            const real z = dot(m.w.data(), x.row(i), x.cols()) + m.b;
            correct += ((z >= 0.0) == (y[i] != 0)) ? 1 : 0;
            ++total;
        }
    }
    return total > 0 ? static_cast<real>(correct) / total : 0.0;
}

// Summaries + decoder-tail gradients for a pool subset.
struct PoolData {
    Mat summaries;
    Mat gradients;
};

PoolData extract_pool(Model& model, const std::vector<EncodedSequence>& pool, int count,
                      int target_class) {
    const Vec mean = concept_mean(model.embedder().concept_emb->value);
    const int d = model.hidden();
    const int n = std::min<int>(count, static_cast<int>(pool.size()));
    PoolData out;
    out.summaries = Mat(n, d);
    out.gradients = Mat(n, d);
    for (int i = 0; i < n; ++i) {
        const auto fwd = model.forward_sequence(pool[i], model.eval_feature_maps(), mean);
        PooledCache cache;
        const PooledOutput po = pooled_decode(fwd.h, model.pooled(), &cache);
        std::copy(po.summary.row(0), po.summary.row(0) + d, out.summaries.row(i));
        const Vec g = pooled_tail_gradient(model.pooled(), cache, target_class);
        std::copy(g.begin(), g.end(), out.gradients.row(i));
    }
    return out;
}

// One replicate = one linear classifier = one concept direction. Each
// replicate redraws its training examples so the score distribution carries
// the sampling variance of the data-collection step: concept replicates take
// fresh subsamples of the matching/non-matching pools; baseline replicates
// take fresh random labelings of the combined pool. Without this the
// bootstrap clusters collapse around one labeling's quirks and the
// Mann-Whitney comparison flags even meaningless concepts.
Vec direction_scores(const Mat& grads, const Mat& pool_pos, const Mat& pool_neg, int take_pos,
                     int take_neg, real l2, const TcavConfig& cfg, std::uint64_t seed,
                     bool fresh_random_labels) {
    const int d = grads.cols();
    Vec scores;
    scores.reserve(cfg.n_bootstrap);
    // Mean gradient lets each direction's score collapse to one dot product.
    Vec gbar(d, 0.0);
    for (int i = 0; i < grads.rows(); ++i) axpy(1.0, grads.row(i), gbar.data(), d);
    for (real& v : gbar) v /= static_cast<real>(grads.rows());

    const int n_pos_pool = pool_pos.rows();
    const int n_neg_pool = pool_neg.rows();
    const int n = take_pos + take_neg;

    for (int bidx = 0; bidx < cfg.n_bootstrap; ++bidx) {
        Rng rng(derive_seed(seed, "replicate", static_cast<std::uint64_t>(bidx)));
        Mat xb(n, d);
        std::vector<std::uint8_t> yb(n);
        if (fresh_random_labels) {
            // label-free null: random rows from the combined pool, arbitrary split
            for (int row = 0; row < n; ++row) {
                const int i = static_cast<int>(rng.below(n_pos_pool + n_neg_pool));
                const real* src = i < n_pos_pool ? pool_pos.row(i) : pool_neg.row(i - n_pos_pool);
                std::copy(src, src + d, xb.row(row));
                yb[row] = row < take_pos ? 1 : 0;
            }
        } else {
            auto subsample = [&](const Mat& pool, int count, int row0, std::uint8_t label) {
                std::vector<int> order(pool.rows());
                for (int i = 0; i < pool.rows(); ++i) order[i] = i;
                rng.shuffle(order);
                for (int k = 0; k < count; ++k) {
                    const int i = order[k % pool.rows()];
                    std::copy(pool.row(i), pool.row(i) + d, xb.row(row0 + k));
                    yb[row0 + k] = label;
                }
            };
            subsample(pool_pos, take_pos, 0, 1);
            subsample(pool_neg, take_neg, take_pos, 0);
        }
        const Logistic m = fit_logistic(xb, yb, l2, cfg.logistic_epochs, cfg.logistic_lr,
                                        derive_seed(seed, "fit", bidx));
        Vec h = m.w;
        const real norm = l2_norm(h.data(), d);
        if (norm < 1e-12) {
            scores.push_back(0.0);
            continue;
        }
        for (real& v : h) v /= norm;  // unit normal to the decision hyperplane
        scores.push_back(dot(gbar.data(), h.data(), d));
    }
    return scores;
}

}  // namespace

TcavResult tcav(Model& model, const ConceptFilter& concept_filter,
                const std::vector<EncodedSequence>& validation_pool,
                const std::vector<EncodedSequence>& test_pool, const TcavConfig& cfg) {
    const int d = model.hidden();

    // Step 2: test-set gradients.
    const PoolData test = extract_pool(model, test_pool, cfg.n_test, cfg.target_class);

    // Steps 3-4: concept / non-concept person-summary pools. Pools are kept
    // larger than one classifier's sample so every replicate can subsample
    // fresh examples.
    std::vector<const EncodedSequence*> concept_seqs, nonconcept_seqs;
    const int pool_cap_pos = 3 * cfg.n_concept;
    const int pool_cap_neg = 3 * cfg.n_nonconcept;
    for (const auto& s : validation_pool) {
        if (concept_filter(s)) {
            if (static_cast<int>(concept_seqs.size()) < pool_cap_pos) concept_seqs.push_back(&s);
        } else if (static_cast<int>(nonconcept_seqs.size()) < pool_cap_neg) {
            nonconcept_seqs.push_back(&s);
        }
    }
    if (concept_seqs.empty()) {
        throw ValidationError("tcav: concept filter matched no sequence in the validation pool");
    }
    if (nonconcept_seqs.empty()) {
        throw ValidationError("tcav: concept filter matched every sequence in the validation pool");
    }

    const Vec mean = concept_mean(model.embedder().concept_emb->value);
    auto summarize = [&](const std::vector<const EncodedSequence*>& seqs) {
        Mat out(static_cast<int>(seqs.size()), d);
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            const auto fwd = model.forward_sequence(*seqs[i], model.eval_feature_maps(), mean);
            const PooledOutput po = pooled_decode(fwd.h, model.pooled());
            std::copy(po.summary.row(0), po.summary.row(0) + d, out.row(static_cast<int>(i)));
        }
        return out;
    };
    const Mat pool_pos = summarize(concept_seqs);
    const Mat pool_neg = summarize(nonconcept_seqs);
    const int take_pos = std::min(cfg.n_concept, pool_pos.rows());
    const int take_neg = std::min(cfg.n_nonconcept, pool_neg.rows());

    // Step 5: cross-validated l2 strength on one drawn classifier sample.
    TcavResult res;
    {
        Mat x(take_pos + take_neg, d);
        std::vector<std::uint8_t> y(take_pos + take_neg, 0);
        Rng rng(derive_seed(cfg.seed, "cv-sample"));
        for (int k = 0; k < take_pos; ++k) {
            const int i = static_cast<int>(rng.below(pool_pos.rows()));
            std::copy(pool_pos.row(i), pool_pos.row(i) + d, x.row(k));
            y[k] = 1;
        }
        for (int k = 0; k < take_neg; ++k) {
            const int i = static_cast<int>(rng.below(pool_neg.rows()));
            std::copy(pool_neg.row(i), pool_neg.row(i) + d, x.row(take_pos + k));
        }
        real best_acc = -1.0;
        for (real l2 : cfg.l2_grid) {
            const real acc = cv_accuracy(x, y, l2, cfg.cv_folds, cfg, derive_seed(cfg.seed, "cv"));
            if (acc > best_acc) {
                best_acc = acc;
                res.chosen_l2 = l2;
            }
        }
    }

    // Steps 6-8: replicate directions and sensitivity scores.
    res.concept_scores =
        direction_scores(test.gradients, pool_pos, pool_neg, take_pos, take_neg, res.chosen_l2,
                         cfg, derive_seed(cfg.seed, "concept"), /*fresh_random_labels=*/false);
    res.baseline_scores =
        direction_scores(test.gradients, pool_pos, pool_neg, take_pos, take_neg, res.chosen_l2,
                         cfg, derive_seed(cfg.seed, "baseline"), /*fresh_random_labels=*/true);

    real sum = 0.0;
    for (real v : res.concept_scores) sum += v;
    res.sensitivity = sum / static_cast<real>(res.concept_scores.size());

    // The Mann-Whitney statistic of concept scores over baseline scores is
    // reported as the effect size. Its textbook p-value is miscalibrated
    // here: replicates of one concept share the labeling, so even a
    // meaningless fixed labeling separates from the fresh-labeling ensemble
    // at bootstrap sample sizes. Significance instead comes from placing the
    // concept's mean sensitivity inside the baseline labeling ensemble
    // (two-sided percentile), which is exchangeable under the null.
    const MannWhitneyResult mw = mann_whitney_u(res.concept_scores, res.baseline_scores);
    res.u_stat = mw.u;
    long at_least = 0, at_most = 0;
    for (real b : res.baseline_scores) {
        if (b >= res.sensitivity) ++at_least;
        if (b <= res.sensitivity) ++at_most;
    }
    const real n_b = static_cast<real>(res.baseline_scores.size());
    const real q_hi = (1.0 + static_cast<real>(at_least)) / (n_b + 1.0);
    const real q_lo = (1.0 + static_cast<real>(at_most)) / (n_b + 1.0);
    res.p_value = std::min(1.0, 2.0 * std::min(q_hi, q_lo));
    return res;
}

}  // namespace lifeseq
