#pragma once

#include <functional>
#include <string>

#include "lifeseq/model.hpp"
#include "lifeseq/rng.hpp"

namespace lifeseq {

struct PretrainConfig {
    real mask_fraction = 0.30;
    real mask_substitute = 0.8;  // of chosen: [MASK] / keep / random token
    real mask_keep = 0.1;
    real mask_random = 0.1;
    real sop_corruption_rate = 0.10;
    // Per-strategy application rates, applied independently in the fixed
    // order: sequence downsampling, temporal noise, background masking,
    // token downsampling.
    real aug_sequence_downsample = 0.1;
    real aug_temporal_noise = 0.1;
    real aug_background_mask = 0.1;
    real aug_token_downsample = 0.1;
    real token_drop_fraction = 0.2;  // per-token drop chance inside token downsampling

    int epochs = 10;
    int batch_size = 32;
    int epoch_size = 5000;  // sampled, augmented sequences per epoch
    int val_subset = 1000;  // validation sequences scored per epoch

    real peak_lr = 1e-3;
    real weight_decay = 0.01;
    real grad_clip = 1.0;
    real perplexity_mlm_weight = 0.7;
    real perplexity_sop_weight = 0.3;

    Vec sop_class_weights{1.1, 10.0, 10.0};
    real sop_smoothing = 0.1;

    std::uint64_t seed = 0;

    void validate() const;
};

enum class SopLabel : int { original = 0, reversed = 1, shuffled = 2 };

struct MaskTargets {
    std::vector<int> positions;
    std::vector<int> original_ids;
};

// Chooses ~mask_fraction of the non-special tokens; 80/10/10 substitution.
// Special tokens are never chosen and never drawn as random replacements.
MaskTargets mask_sequence(EncodedSequence& seq, const Vocabulary& vocab, const PretrainConfig& cfg,
                          Rng& rng);

// With probability `rate`, exchanges whole-event token lists (reversal or
// random pairing); stamps stay with their slots. Fewer than two events means
// the label is always `original`.
SopLabel corrupt_order(EncodedSequence& seq, real rate, Rng& rng);

// The four augmentations, applied independently in the fixed order.
void augment(EncodedSequence& seq, const PretrainConfig& cfg, Rng& rng);

struct PretrainEpoch {
    int epoch = 0;
    real train_mlm = 0.0;
    real train_sop = 0.0;
    real val_mlm = 0.0;
    real val_sop = 0.0;
    real val_perplexity = 0.0;
    real val_mlm_accuracy = 0.0;
    real lr = 0.0;
};

struct PretrainHistory {
    std::vector<PretrainEpoch> epochs;
    int best_epoch = -1;
    real best_perplexity = 0.0;
};

// CSV with header epoch,mlm_loss,sop_loss,perplexity,lr.
void write_history_csv(const std::string& path, const PretrainHistory& history);

struct MlmEvaluation {
    real mlm_loss = 0.0;
    real sop_loss = 0.0;
    real accuracy = 0.0;
    long masked_total = 0;
    long correct = 0;
};

// Deterministic evaluation: corruption and masking seeded per sequence index
// (epoch-independent), no augmentation.
MlmEvaluation evaluate_mlm_sop(Model& model, const std::vector<EncodedSequence>& seqs,
                               const Vocabulary& vocab, const PretrainConfig& cfg);

// Accuracy of always predicting the most frequent non-special corpus token,
// measured on the same deterministic masked targets as evaluate_mlm_sop.
real unigram_baseline_accuracy(const std::vector<EncodedSequence>& seqs, const Vocabulary& vocab,
                               const PretrainConfig& cfg);

// Joint MLM + SOP training. Keeps the best-validation-perplexity parameters
// in the model on return. Throws ComputeError naming the step on divergence.
PretrainHistory pretrain(Model& model, const std::vector<EncodedSequence>& train,
                         const std::vector<EncodedSequence>& validation, const Vocabulary& vocab,
                         const PretrainConfig& cfg,
                         const std::function<void(const PretrainEpoch&)>& on_epoch = {});

}  // namespace lifeseq
