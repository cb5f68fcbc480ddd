#include "lifeseq/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "lifeseq/embedder.hpp"
#include "lifeseq/metrics.hpp"
#include "lifeseq/optim.hpp"

namespace lifeseq {

namespace {

// The concept matrix is frozen during finetuning except for the rows of
// [CLS], [SEP] and [UNK]. Freezing is enforced by restoring every other row
// after each optimizer step, which keeps them bit-identical.
class EmbeddingFreezer {
public:
    explicit EmbeddingFreezer(Model& model)
        : param_(model.embedder().concept_emb), snapshot_(param_->value) {}

    void restore_frozen_rows() {
        const int d = param_->value.cols();
        for (int r = 0; r < param_->value.rows(); ++r) {
            if (r == kCls || r == kSep || r == kUnk) continue;
            std::copy(snapshot_.row(r), snapshot_.row(r) + d, param_->value.row(r));
        }
    }

private:
    Param* param_;
    Mat snapshot_;
};

// Layer-wise rates: decoder group 0 keeps the base rate; encoder group k and
// the embedding block decay by layer_lr_decay per step down the ladder.
template <class Opt>
void configure_groups(Opt& opt, const FinetuneConfig& cfg) {
    const auto& params = opt.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const int group = params[i]->lr_group;
        opt.set_rate_scale(i, std::pow(cfg.layer_lr_decay, static_cast<real>(group)));
        opt.set_weight_decay(i, group == 0 ? cfg.decoder_weight_decay : cfg.encoder_weight_decay);
    }
}

struct BestState {
    std::vector<Mat> values;
    void capture(Model& model) {
        values.clear();
        for (Param* p : model.store().all()) values.push_back(p->value);
    }
    void restore(Model& model) {
        if (values.empty()) return;
        auto params = model.store().all();
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
    }
};

}  // namespace

DifficultyState DifficultyState::init(std::size_t n, real c, real alpha, real clip) {
    DifficultyState s;
    s.D.assign(n, c);
    s.ewa_alpha = alpha;
    s.clip = clip;
    return s;
}

void update_difficulty(DifficultyState& state, const std::vector<std::array<real, 4>>& raw) {
    if (raw.size() != state.D.size()) {
        throw ValidationError("update_difficulty: difficulty vector size mismatch");
    }
    Vec d(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        real mx = raw[i][0];
        for (int k = 1; k < 4; ++k) mx = std::max(mx, raw[i][k]);
        d[i] = std::min(mx, state.clip);
    }
    const real iqr = quantile(d, 0.75) - quantile(d, 0.25);
    const real denom = iqr > 0.0 ? iqr : 1.0;  // documented IQR = 0 fallback
    for (std::size_t i = 0; i < d.size(); ++i) {
        state.D[i] = state.ewa_alpha * (d[i] / denom) + (1.0 - state.ewa_alpha) * state.D[i];
    }
}

PuBatchSampler PuBatchSampler::make(const std::vector<std::uint8_t>& labels, std::uint64_t seed) {
    PuBatchSampler s;
    s.seed = seed;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] ? s.pos_indices : s.unl_indices).push_back(static_cast<int>(i));
    }
    return s;
}

std::vector<int> PuBatchSampler::batch(long step, int batch_size, int& positive_count) const {
    if (pos_indices.empty() || unl_indices.empty()) {
        throw ValidationError("PU batch sampler needs both positive and unlabeled samples");
    }
    Rng rng(derive_seed(seed, "pu-batch", static_cast<std::uint64_t>(step)));
    positive_count = batch_size / 2;
    std::vector<int> out;
    out.reserve(batch_size);
    for (int i = 0; i < positive_count; ++i) out.push_back(pos_indices[rng.below(pos_indices.size())]);
    for (int i = positive_count; i < batch_size; ++i) {
        out.push_back(unl_indices[rng.below(unl_indices.size())]);
    }
    return out;
}

Vec score_mortality(Model& model, const Cohort& cohort) {
    const Vec mean = concept_mean(model.embedder().concept_emb->value);
    Vec scores(cohort.size(), 0.0);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto fwd = model.forward_sequence(cohort.sequences[i], model.eval_feature_maps(), mean);
        const PooledOutput out = pooled_decode(fwd.h, model.pooled());
        const Vec p = sigsoftmax({out.logits(0, 0), out.logits(0, 1)});
        scores[i] = p[1];
    }
    return scores;
}

std::vector<std::array<int, 4>> predict_personality(Model& model, const Cohort& cohort) {
    const Vec mean = concept_mean(model.embedder().concept_emb->value);
    std::vector<std::array<int, 4>> out(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto fwd = model.forward_sequence(cohort.sequences[i], model.eval_feature_maps(), mean);
        Mat cls(1, model.hidden());
        std::copy(fwd.h.row(0), fwd.h.row(0) + model.hidden(), cls.row(0));
        const Mat logits = two_layer_decode(cls, model.ordinal());
        for (int item = 0; item < 4; ++item) {
            int best = 0;
            for (int lvl = 1; lvl < 5; ++lvl) {
                if (logits(0, item * 5 + lvl) > logits(0, item * 5 + best)) best = lvl;
            }
            out[i][item] = best;
        }
    }
    return out;
}

void write_finetune_history_csv(const std::string& path, const FinetuneHistory& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "epoch,train_loss,val_metric,lr\n";
    char buf[128];
    for (const auto& e : history.epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss, e.val_metric,
                      e.lr);
        out << buf;
    }
}

namespace {

FinetuneHistory run_mortality(Model& model, const Cohort& train, const Cohort& validation,
                              const FinetuneConfig& cfg, real c,
                              const std::function<void(const FinetuneEpoch&)>& on_epoch) {
    EmbeddingFreezer freezer(model);
    AdamWConfig ocfg;
    RAdam opt(model.store().all(), ocfg);
    configure_groups(opt, cfg);
    ExponentialSchedule schedule{cfg.lr_gamma};

    PuBatchSampler sampler = PuBatchSampler::make(train.positive, cfg.seed);
    const long steps_per_epoch = std::max<long>(1, cfg.epoch_size / cfg.batch_size);

    FinetuneHistory history;
    history.chosen_c = c;
    BestState best;
    int since_best = 0;
    long step = 0;
    const int d = model.hidden();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const real lr = schedule.rate_at(cfg.decoder_lr, epoch);
        real loss_sum = 0.0;
        for (long s = 0; s < steps_per_epoch; ++s) {
            model.store().zero_grads();
            const Vec mean = concept_mean(model.embedder().concept_emb->value);
            const FeatureMaps fms = draw_feature_maps(
                model.config().enc, derive_seed(cfg.seed, "ft-favor", static_cast<std::uint64_t>(step)));
            int n_pos = 0;
            const std::vector<int> batch = sampler.batch(step, cfg.batch_size, n_pos);
            const int n = static_cast<int>(batch.size());

            Mat logits(n, 2);
            std::vector<Model::SeqForward> fwds(n);
            std::vector<PooledCache> caches(n);
            for (int b = 0; b < n; ++b) {
                fwds[b] = model.forward_sequence(train.sequences[batch[b]], fms, mean);
                const PooledOutput out = pooled_decode(fwds[b].h, model.pooled(), &caches[b]);
                logits(b, 0) = out.logits(0, 0);
                logits(b, 1) = out.logits(0, 1);
            }
            const real loss = asymmetric_ce(logits, n_pos, c);
            if (!std::isfinite(loss)) {
                throw ComputeError("finetune_mortality: loss diverged at step " +
                                   std::to_string(step));
            }
            loss_sum += loss;
            const Mat dlogits = asymmetric_ce_grad(logits, n_pos, c);
            for (int b = 0; b < n; ++b) {
                Mat dl(1, 2);
                dl(0, 0) = dlogits(b, 0);
                dl(0, 1) = dlogits(b, 1);
                const Mat dh = pooled_decode_backward(model.pooled(), caches[b], dl);
                model.backward_sequence(train.sequences[batch[b]], fwds[b], fms, dh);
            }
            (void)d;
            clip_grad_norm(opt.params(), cfg.grad_clip);
            opt.step(lr);
            freezer.restore_frozen_rows();
            ++step;
        }

        const Vec val_scores = score_mortality(model, validation);
        const real val_aul = aul(PuPredictions{val_scores, validation.positive});

        FinetuneEpoch row{epoch + 1, loss_sum / static_cast<real>(steps_per_epoch), val_aul, lr};
        history.epochs.push_back(row);
        if (on_epoch) on_epoch(row);

        if (history.best_epoch < 0 || val_aul > history.best_metric) {
            history.best_epoch = row.epoch;
            history.best_metric = val_aul;
            best.capture(model);
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;  // early stop on validation AUL
        }
    }
    best.restore(model);
    return history;
}

}  // namespace

FinetuneHistory finetune_mortality(Model& model, const Cohort& train, const Cohort& validation,
                                   const FinetuneConfig& cfg,
                                   const std::function<void(const FinetuneEpoch&)>& on_epoch) {
    long n_pos = 0;
    for (auto l : train.positive) n_pos += l;
    if (n_pos == 0) throw ValidationError("finetune_mortality: cohort has no positive samples");
    if (n_pos == static_cast<long>(train.positive.size())) {
        throw ValidationError("finetune_mortality: cohort has no unlabeled samples");
    }

    real c = cfg.asymmetric_c;
    if (cfg.select_c_by_aul) {
        // Short probes over the grid, each from the same pretrained state.
        std::vector<Mat> initial;
        for (Param* p : model.store().all()) initial.push_back(p->value);
        real best_aul = -1.0;
        for (real cand : cfg.c_grid) {
            FinetuneConfig probe = cfg;
            probe.epochs = 1;
            probe.select_c_by_aul = false;
            auto params = model.store().all();
            for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = initial[i];
            const FinetuneHistory h = run_mortality(model, train, validation, probe, cand, {});
            if (h.best_metric > best_aul) {
                best_aul = h.best_metric;
                c = cand;
            }
        }
        auto params = model.store().all();
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = initial[i];
    }
    return run_mortality(model, train, validation, cfg, c, on_epoch);
}

FinetuneHistory finetune_personality(Model& model, const Cohort& train, const Cohort& validation,
                                     const FinetuneConfig& cfg,
                                     const std::function<void(const FinetuneEpoch&)>& on_epoch) {
    if (train.items.size() != train.size() || validation.items.size() != validation.size()) {
        throw ValidationError("finetune_personality: cohorts must carry item responses");
    }
    for (int item = 0; item < 4; ++item) {
        std::set<int> seen;
        for (const auto& it : train.items) seen.insert(it[item]);
        if (seen.size() < 2) {
            throw ValidationError("finetune_personality: item " + std::to_string(item + 1) +
                                  " has a single observed level in the training cohort");
        }
    }

    EmbeddingFreezer freezer(model);
    AdamWConfig ocfg;
    RAdam opt(model.store().all(), ocfg);
    configure_groups(opt, cfg);
    ExponentialSchedule schedule{cfg.lr_gamma};

    DifficultyState difficulty = DifficultyState::init(
        train.size(), cfg.difficulty_init, cfg.difficulty_ewa_alpha, cfg.difficulty_clip);

    const long steps_per_epoch = std::max<long>(1, cfg.epoch_size / cfg.batch_size);
    const int d = model.hidden();

    FinetuneHistory history;
    BestState best;
    int since_best = 0;
    long step = 0;

    auto item_probs = [&](const Mat& logits, int item) {
        Vec z(5);
        for (int l = 0; l < 5; ++l) z[l] = logits(0, item * 5 + l);
        return sigsoftmax(z);
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const real lr = schedule.rate_at(cfg.decoder_lr, epoch);
        real loss_sum = 0.0;
        long loss_count = 0;
        for (long s = 0; s < steps_per_epoch; ++s) {
            model.store().zero_grads();
            const Vec mean = concept_mean(model.embedder().concept_emb->value);
            const FeatureMaps fms = draw_feature_maps(
                model.config().enc,
                derive_seed(cfg.seed, "ft-favor", static_cast<std::uint64_t>(step)));
            Rng rng(derive_seed(cfg.seed, "ord-batch", static_cast<std::uint64_t>(step)));
            const real batch_scale = 1.0 / cfg.batch_size;
            for (int b = 0; b < cfg.batch_size; ++b) {
                // difficulty-weighted sampling (uniform while D is constant)
                const int idx = cfg.difficulty_resampling
                                    ? rng.categorical(difficulty.D)
                                    : static_cast<int>(rng.below(train.size()));
                const auto fwd = model.forward_sequence(train.sequences[idx], fms, mean);
                Mat cls(1, d);
                std::copy(fwd.h.row(0), fwd.h.row(0) + d, cls.row(0));
                TwoLayerCache cache;
                const Mat logits = two_layer_decode(cls, model.ordinal(), &cache);

                Mat d_logits(1, 20);
                real loss = 0.0;
                for (int item = 0; item < 4; ++item) {
                    const Vec z(logits.row(0) + item * 5, logits.row(0) + item * 5 + 5);
                    const Vec p = sigsoftmax(z);
                    const int y = train.items[idx][item];
                    loss += combined_personality_loss(y, p, cfg.personality_loss);
                    Vec dp = combined_personality_loss_grad(y, p, cfg.personality_loss);
                    const Vec dz = sigsoftmax_backward(z, p, dp);
                    for (int l = 0; l < 5; ++l) {
                        d_logits(0, item * 5 + l) = dz[l] * batch_scale / 4.0;
                    }
                }
                loss /= 4.0;  // averaged across the four items
                loss_sum += loss;
                ++loss_count;
                const Mat d_cls = two_layer_decode_backward(model.ordinal(), cache, d_logits);
                Mat dh(fwd.len, d);
                axpy(1.0, d_cls.row(0), dh.row(0), d);
                model.backward_sequence(train.sequences[idx], fwd, fms, dh);
            }
            if (!std::isfinite(loss_sum)) {
                throw ComputeError("finetune_personality: loss diverged at step " +
                                   std::to_string(step));
            }
            clip_grad_norm(opt.params(), cfg.grad_clip);
            opt.step(lr);
            freezer.restore_frozen_rows();
            ++step;
        }

        // Raw difficulties for every training sample (evaluation mode pass).
        if (cfg.difficulty_resampling) {
            const Vec mean = concept_mean(model.embedder().concept_emb->value);
            std::vector<std::array<real, 4>> raw(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) {
                const auto fwd =
                    model.forward_sequence(train.sequences[i], model.eval_feature_maps(), mean);
                Mat cls(1, d);
                std::copy(fwd.h.row(0), fwd.h.row(0) + d, cls.row(0));
                const Mat logits = two_layer_decode(cls, model.ordinal());
                for (int item = 0; item < 4; ++item) {
                    const Vec p = item_probs(logits, item);
                    raw[i][item] =
                        combined_personality_loss(train.items[i][item], p, cfg.personality_loss);
                }
            }
            update_difficulty(difficulty, raw);
        }

        // Validation CQK averaged over items.
        const auto preds = predict_personality(model, validation);
        real kappa_sum = 0.0;
        for (int item = 0; item < 4; ++item) {
            std::vector<int> truth(validation.size()), pred(validation.size());
            for (std::size_t i = 0; i < validation.size(); ++i) {
                truth[i] = validation.items[i][item];
                pred[i] = preds[i][item];
            }
            kappa_sum += cqk(truth, pred, 5);
        }
        const real val_cqk = kappa_sum / 4.0;

        FinetuneEpoch row{epoch + 1, loss_count ? loss_sum / loss_count : 0.0, val_cqk, lr};
        history.epochs.push_back(row);
        if (on_epoch) on_epoch(row);

        if (history.best_epoch < 0 || val_cqk > history.best_metric) {
            history.best_epoch = row.epoch;
            history.best_metric = val_cqk;
            best.capture(model);
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;  // terminate when the validation score stops improving
        }
    }
    best.restore(model);
    return history;
}

}  // namespace lifeseq
