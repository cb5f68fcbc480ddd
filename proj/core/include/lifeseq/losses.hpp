#pragma once

#include <vector>

#include "lifeseq/matrix.hpp"

namespace lifeseq {

// Probability stages -------------------------------------------------------

Vec softmax(const Vec& logits);
// dL/dlogits given dL/dprobs.
Vec softmax_backward(const Vec& probs, const Vec& d_probs);

// sigsoftmax: p_i = exp(z_i) sigmoid(z_i) / sum_j exp(z_j) sigmoid(z_j)
Vec sigsoftmax(const Vec& logits);
Vec sigsoftmax_backward(const Vec& logits, const Vec& probs, const Vec& d_probs);

// Losses on probability vectors --------------------------------------------
// Gradients are with respect to the probability inputs; the caller chains
// them through softmax/sigsoftmax as needed.

real cross_entropy(const Vec& onehot, const Vec& probs);
Vec cross_entropy_grad(const Vec& onehot, const Vec& probs);

// Weighted cross-entropy with label smoothing, the standard smoothed-target
// form: -sum_i w_i ((1-alpha) y_i + alpha/n) log p_i.
real ce_label_smoothing(const Vec& onehot, const Vec& probs, const Vec& weights, real alpha);
Vec ce_label_smoothing_grad(const Vec& onehot, const Vec& probs, const Vec& weights, real alpha);

// Class-distance-weighted CE for ordinal targets: -sum_{i != y} log(1 - p_i) |i - y|^alpha.
real cdw_ce(int true_level, const Vec& probs, real alpha);
Vec cdw_ce_grad(int true_level, const Vec& probs, real alpha);

// Focal loss: -sum_i y_i (1 - p_i)^gamma log p_i.
real focal(const Vec& onehot, const Vec& probs, real gamma);
Vec focal_grad(const Vec& onehot, const Vec& probs, real gamma);

struct PersonalityLossConfig {
    real cdw_alpha = 1.5;
    real focal_gamma = 5.0;
    real smoothing_alpha = 0.1;
    real mix_cdw = 0.3;
    real mix_focal = 1.0;
    real mix_smoothing = 0.1;
};

// Mixture used per personality item; callers average across items.
real combined_personality_loss(int true_level, const Vec& probs, const PersonalityLossConfig& cfg);
Vec combined_personality_loss_grad(int true_level, const Vec& probs,
                                   const PersonalityLossConfig& cfg);

// Asymmetric cross-entropy on a batch of 2-class logits -------------------
// Row layout: class 0 = unlabeled/negative, class 1 = positive. The first
// `positive_count` rows are the positive-labeled samples. For unlabeled rows
// the positive logit is handicapped by +c before normalization, which makes
// confident negatives harder to claim and the unlabeled term monotonically
// increasing in c. Probabilities come from sigsoftmax to match the decoder.
real asymmetric_ce(const Mat& logits, int positive_count, real c);
Mat asymmetric_ce_grad(const Mat& logits, int positive_count, real c);

}  // namespace lifeseq
