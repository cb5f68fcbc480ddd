#pragma once

#include <array>
#include <functional>
#include <optional>

#include "lifeseq/losses.hpp"
#include "lifeseq/model.hpp"
#include "lifeseq/rng.hpp"

namespace lifeseq {

// Sequences paired with finetuning targets, aligned by index.
struct Cohort {
    std::vector<EncodedSequence> sequences;
    std::vector<std::uint8_t> positive;          // mortality PU labels
    std::vector<std::array<int, 4>> items;       // personality ordinal levels

    std::size_t size() const { return sequences.size(); }
};

struct FinetuneConfig {
    real decoder_lr = 0.01;
    real layer_lr_decay = 0.95;  // 5% less per deeper encoder layer
    real lr_gamma = 0.8;         // exponential epoch decay
    real decoder_weight_decay = 0.01;
    real encoder_weight_decay = 0.001;
    int epochs = 15;
    int batch_size = 32;
    int epoch_size = 2000;  // sampled sequences per epoch
    int patience = 3;
    real grad_clip = 1.0;

    real asymmetric_c = 0.5;
    bool select_c_by_aul = false;             // grid-probe c by validation AUL first
    std::vector<real> c_grid{0.0, 0.25, 0.5, 1.0};

    bool difficulty_resampling = true;
    real difficulty_ewa_alpha = 0.5;
    real difficulty_clip = 100.0;
    real difficulty_init = 1.0;

    PersonalityLossConfig personality_loss;
    std::uint64_t seed = 0;
};

// Difficulty-driven sampling state (one entry per training sample).
struct DifficultyState {
    Vec D;
    real ewa_alpha = 0.5;
    real clip = 100.0;

    static DifficultyState init(std::size_t n, real c, real alpha, real clip);
};

// d_i = min(max_j raw_ij, clip), robust-scaled by the sample IQR (an IQR of
// zero falls back to a unit denominator), then folded into the running
// average: D = alpha * scaled + (1 - alpha) * D_prev.
void update_difficulty(DifficultyState& state, const std::vector<std::array<real, 4>>& raw_per_item);

struct FinetuneEpoch {
    int epoch = 0;
    real train_loss = 0.0;
    real val_metric = 0.0;  // AUL (mortality) or mean CQK (personality)
    real lr = 0.0;
};

struct FinetuneHistory {
    std::vector<FinetuneEpoch> epochs;
    int best_epoch = -1;
    real best_metric = 0.0;
    real chosen_c = 0.0;  // mortality only
};

void write_finetune_history_csv(const std::string& path, const FinetuneHistory& history);

// Rebalanced PU batch stream: every batch is half positives, half unlabeled
// (positives first). The index stream is a pure function of (seed, step), so
// any consumer with the same seed sees byte-identical batches.
struct PuBatchSampler {
    std::vector<int> pos_indices;
    std::vector<int> unl_indices;
    std::uint64_t seed = 0;

    static PuBatchSampler make(const std::vector<std::uint8_t>& labels, std::uint64_t seed);
    // Returns batch indices, positives first; positive_count receives the split.
    std::vector<int> batch(long step, int batch_size, int& positive_count) const;
};

// Scores P(positive) for every cohort member (evaluation feature maps).
Vec score_mortality(Model& model, const Cohort& cohort);

// Per-item level predictions: out[i][k] = argmax level of item k.
std::vector<std::array<int, 4>> predict_personality(Model& model, const Cohort& cohort);

FinetuneHistory finetune_mortality(Model& model, const Cohort& train, const Cohort& validation,
                                   const FinetuneConfig& cfg,
                                   const std::function<void(const FinetuneEpoch&)>& on_epoch = {});

FinetuneHistory finetune_personality(Model& model, const Cohort& train, const Cohort& validation,
                                     const FinetuneConfig& cfg,
                                     const std::function<void(const FinetuneEpoch&)>& on_epoch = {});

}  // namespace lifeseq
