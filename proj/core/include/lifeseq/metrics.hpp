#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lifeseq/common.hpp"

namespace lifeseq {

// Scores with positive/unlabeled labels (PU convention: 1 = labeled positive).
struct PuPredictions {
    Vec scores;                       // P(positive) in [0, 1]
    std::vector<std::uint8_t> labels;  // 1 = positive, 0 = unlabeled
};

// Corrected Matthews correlation coefficient. Under the
// selected-completely-at-random assumption the labeled positives estimate the
// true positive rate; the supplied positive prevalence locates the hidden
// positives inside the unlabeled set. With the default prevalence (labeled
// fraction) the correction vanishes and the value equals plain MCC computed
// with unlabeled-as-negative. A degenerate confusion matrix yields 0.
real cmcc(const PuPredictions& preds, real threshold = 0.5,
          std::optional<real> positive_prevalence = std::nullopt);

// Plain MCC treating unlabeled as negatives (oracle companion for cmcc).
real plain_mcc(const PuPredictions& preds, real threshold = 0.5);

// Area under the lift curve: cumulative-gains area with tie groups averaged;
// equals P(score of a random positive ranks above a random sample, ties half).
real aul(const PuPredictions& preds);

struct CorrectedRates {
    real balanced_accuracy = 0.0;
    real f1 = 0.0;
};
CorrectedRates corrected_accuracy_f1(const PuPredictions& preds, real threshold = 0.5,
                                     std::optional<real> positive_prevalence = std::nullopt);

// Cohen's quadratically weighted kappa.
real cqk(const std::vector<int>& truth, const std::vector<int>& predicted, int n_levels = 5);

struct BootstrapCi {
    real low = 0.0;
    real high = 0.0;
    real median = 0.0;
    Vec resample_values;
};

// Label-stratified bootstrap percentile interval; resample r draws its
// randomness from derive_seed(seed, r) so extending n_resamples keeps the
// existing stream prefix intact.
BootstrapCi bootstrap_ci(const PuPredictions& preds,
                         const std::function<real(const PuPredictions&)>& metric,
                         int n_resamples = 1000, real level = 0.95, bool stratified = true,
                         std::uint64_t seed = 0);

// Type-7 (linear interpolation) quantile of a sample.
real quantile(Vec values, real q);

}  // namespace lifeseq
