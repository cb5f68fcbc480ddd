#pragma once

#include <functional>

#include "lifeseq/model.hpp"

namespace lifeseq {

// SmoothGrad saliency: Gaussian noise on the input token embeddings, gradient
// of the chosen class logit (default: the clean prediction's class) times the
// noisy embedding, l2-normed per token, averaged over draws. [PAD] positions
// report 0. Gradient buffers are used as scratch.
Vec saliency(Model& model, const EncodedSequence& seq, int n_samples, real sigma,
             std::uint64_t seed, int target_class = -1);

// Pooled-decoder additive-attention weights per token; zero on [PAD].
Vec attention_scores(Model& model, const EncodedSequence& seq);

// Two-sided Mann-Whitney U. Exact p by enumeration when both samples are
// small and tie-free; otherwise the tie-corrected normal approximation with
// continuity correction. All-tied samples give p = 1.
struct MannWhitneyResult {
    real u = 0.0;  // U statistic of sample a over sample b (ties count half)
    real p_value = 1.0;
};
MannWhitneyResult mann_whitney_u(const Vec& a, const Vec& b);

using ConceptFilter = std::function<bool(const EncodedSequence&)>;

struct TcavConfig {
    int n_test = 1000;        // test-pool gradients
    int n_concept = 300;      // concept examples
    int n_nonconcept = 500;   // non-concept examples
    int n_bootstrap = 1000;   // bootstrapped linear classifiers
    int cv_folds = 5;
    Vec l2_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    int logistic_epochs = 60;
    real logistic_lr = 0.1;
    int target_class = 1;
    std::uint64_t seed = 0;
};

struct TcavResult {
    real sensitivity = 0.0;  // mean over (gradient, direction) dot products
    real p_value = 1.0;      // Mann-Whitney U against the random-concept baseline
    real u_stat = 0.0;
    Vec concept_scores;      // per-direction mean dot products
    Vec baseline_scores;
    real chosen_l2 = 0.0;
};

// Full procedure: person summaries, decoder-tail gradients, concept /
// non-concept sets, cross-validated l2, bootstrapped logistic normals,
// sensitivity, significance.
TcavResult tcav(Model& model, const ConceptFilter& concept_filter,
                const std::vector<EncodedSequence>& validation_pool,
                const std::vector<EncodedSequence>& test_pool, const TcavConfig& cfg);

// Person summary of one sequence (pooled decoder, evaluation feature maps).
Vec person_summary(Model& model, const EncodedSequence& seq);

}  // namespace lifeseq
