#include "lifeseq/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lifeseq/embedder.hpp"
#include "lifeseq/losses.hpp"
#include "lifeseq/optim.hpp"

namespace lifeseq {

namespace {

// Sentence-level view used by corruption and augmentation.
struct Sentences {
    std::vector<int> background;  // the 4 background token ids
    int cls_segment = 0;
    struct Event {
        std::vector<int> ids;
        TemporalStamp stamp;
    };
    std::vector<Event> events;
};

Sentences decompose(const EncodedSequence& seq) {
    Sentences s;
    int pos = 1;  // past [CLS]
    s.cls_segment = seq.segment[0];
    while (pos < seq.max_len && seq.padding_mask[pos] && seq.token_ids[pos] != kSep) {
        s.background.push_back(seq.token_ids[pos]);
        ++pos;
    }
    ++pos;  // background [SEP]
    Sentences::Event ev;
    for (; pos < seq.max_len && seq.padding_mask[pos]; ++pos) {
        if (seq.token_ids[pos] == kSep) {
            ev.stamp = TemporalStamp{seq.abs_position[pos], seq.age[pos], seq.segment[pos]};
            s.events.push_back(std::move(ev));
            ev = Sentences::Event{};
        } else {
            ev.ids.push_back(seq.token_ids[pos]);
        }
    }
    return s;
}

void reassemble(EncodedSequence& seq, const Sentences& s) {
    const int max_len = seq.max_len;
    std::fill(seq.token_ids.begin(), seq.token_ids.end(), static_cast<int>(kPad));
    std::fill(seq.abs_position.begin(), seq.abs_position.end(), kNoStamp);
    std::fill(seq.age.begin(), seq.age.end(), kNoStamp);
    std::fill(seq.segment.begin(), seq.segment.end(), 0);
    std::fill(seq.padding_mask.begin(), seq.padding_mask.end(), static_cast<std::uint8_t>(0));

    int pos = 0;
    auto emit = [&](int id, const TemporalStamp& st) {
        seq.token_ids[pos] = id;
        seq.abs_position[pos] = st.abs_position;
        seq.age[pos] = st.age;
        seq.segment[pos] = st.segment;
        seq.padding_mask[pos] = 1;
        ++pos;
    };
    const TemporalStamp bg{kNoStamp, kNoStamp, s.cls_segment};
    emit(kCls, bg);
    for (int id : s.background) emit(id, bg);
    emit(kSep, bg);
    for (const auto& ev : s.events) {
        for (int id : ev.ids) emit(id, ev.stamp);
        emit(kSep, ev.stamp);
    }
    if (pos > max_len) throw ComputeError("reassemble: sequence overflowed max_len");
}

}  // namespace

void PretrainConfig::validate() const {
    auto frac = [](real v, const char* name) {
        if (v < 0.0 || v > 1.0) {
            throw ValidationError(std::string("pretrain config: ") + name + " must lie in [0, 1]");
        }
    };
    frac(mask_fraction, "mask_fraction");
    frac(sop_corruption_rate, "sop_corruption_rate");
    frac(aug_sequence_downsample, "aug_sequence_downsample");
    frac(aug_temporal_noise, "aug_temporal_noise");
    frac(aug_background_mask, "aug_background_mask");
    frac(aug_token_downsample, "aug_token_downsample");
    frac(token_drop_fraction, "token_drop_fraction");
    if (std::fabs(mask_substitute + mask_keep + mask_random - 1.0) > 1e-9) {
        throw ValidationError("pretrain config: mask substitution split must sum to 1");
    }
    if (epochs < 1 || batch_size < 1 || epoch_size < 1) {
        throw ValidationError("pretrain config: epochs, batch_size and epoch_size must be >= 1");
    }
}

MaskTargets mask_sequence(EncodedSequence& seq, const Vocabulary& vocab, const PretrainConfig& cfg,
                          Rng& rng) {
    MaskTargets mt;
    const int n_regular = vocab.size() - kNumSpecial;
    for (int i = 0; i < seq.max_len && seq.padding_mask[i]; ++i) {
        const int id = seq.token_ids[i];
        if (id < kNumSpecial) continue;  // specials are never masked
        if (!rng.bernoulli(cfg.mask_fraction)) continue;
        mt.positions.push_back(i);
        mt.original_ids.push_back(id);
        const real u = rng.uniform();
        if (u < cfg.mask_substitute) {
            seq.token_ids[i] = kMask;
        } else if (u < cfg.mask_substitute + cfg.mask_keep) {
            // left unchanged
        } else {
            seq.token_ids[i] = kNumSpecial + rng.below_int(n_regular);
        }
    }
    return mt;
}

SopLabel corrupt_order(EncodedSequence& seq, real rate, Rng& rng) {
    Sentences s = decompose(seq);
    const int n = static_cast<int>(s.events.size());
    if (n < 2) return SopLabel::original;
    if (!rng.bernoulli(rate)) return SopLabel::original;
    const bool reversed = rng.bernoulli(0.5);

    if (reversed) {
        std::vector<std::vector<int>> ids(n);
        for (int i = 0; i < n; ++i) ids[i] = s.events[i].ids;
        for (int i = 0; i < n; ++i) s.events[i].ids = ids[n - 1 - i];
    } else {
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        for (int k = 0; k + 1 < n; k += 2) {
            std::swap(s.events[order[k]].ids, s.events[order[k + 1]].ids);
        }
    }
    reassemble(seq, s);
    return reversed ? SopLabel::reversed : SopLabel::shuffled;
}

void augment(EncodedSequence& seq, const PretrainConfig& cfg, Rng& rng) {
    Sentences s = decompose(seq);

    // 1. sequence downsampling: remove up to 50% of life-events
    if (!s.events.empty() && rng.bernoulli(cfg.aug_sequence_downsample)) {
        const int n = static_cast<int>(s.events.size());
        const int k = rng.below_int(n / 2 + 1);
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        std::vector<bool> drop(n, false);
        for (int i = 0; i < k; ++i) drop[order[i]] = true;
        std::vector<Sentences::Event> kept;
        kept.reserve(n - k);
        for (int i = 0; i < n; ++i) {
            if (!drop[i]) kept.push_back(std::move(s.events[i]));
        }
        s.events = std::move(kept);
    }

    // 2. temporal noise: integer U(-5,5) days on each event's absolute time
    if (rng.bernoulli(cfg.aug_temporal_noise)) {
        for (auto& ev : s.events) {
            if (ev.stamp.abs_position == kNoStamp) continue;
            const int delta = rng.below_int(11) - 5;
            ev.stamp.abs_position = std::max(0, ev.stamp.abs_position + delta);
        }
    }

    // 3. background masking: the background tokens become [UNK]
    if (rng.bernoulli(cfg.aug_background_mask)) {
        for (auto& id : s.background) id = kUnk;
    }

    // 4. token downsampling: drop tokens inside events, never [CLS]/[SEP],
    //    keeping at least one token per event
    if (rng.bernoulli(cfg.aug_token_downsample)) {
        for (auto& ev : s.events) {
            std::vector<int> kept;
            kept.reserve(ev.ids.size());
            for (int id : ev.ids) {
                if (!rng.bernoulli(cfg.token_drop_fraction)) kept.push_back(id);
            }
            if (kept.empty() && !ev.ids.empty()) kept.push_back(ev.ids.front());
            ev.ids = std::move(kept);
        }
    }

    reassemble(seq, s);
}

namespace {

struct SeqLossResult {
    real mlm = 0.0;
    real sop = 0.0;
    long masked = 0;
    long correct = 0;
};

// Forward (and optionally backward) of one prepared sequence.
SeqLossResult mlm_sop_pass(Model& model, const EncodedSequence& seq, const MaskTargets& mt,
                           SopLabel label, const FeatureMaps& fms, const Vec& mean,
                           const TiedProjection& tp, const PretrainConfig& cfg, bool train,
                           real batch_scale) {
    SeqLossResult res;
    Model::SeqForward fwd = model.forward_sequence(seq, fms, mean);
    const int d = model.hidden();

    Mat d_h(fwd.len, d);

    // --- MLM at masked positions
    const int n_masked = static_cast<int>(mt.positions.size());
    if (n_masked > 0) {
        MlmCache mlm_cache;
        Mat rows(n_masked, d);
        for (int m = 0; m < n_masked; ++m) {
            const real* src = fwd.h.row(mt.positions[m]);
            std::copy(src, src + d, rows.row(m));
        }
        Mat logits = mlm_decode(rows, model.mlm(), tp, model.config().mlm_logit_scale, &mlm_cache);
        Mat d_logits(n_masked, model.vocab_size());
        for (int m = 0; m < n_masked; ++m) {
            Vec z(logits.row(m), logits.row(m) + model.vocab_size());
            const Vec p = softmax(z);
            const int target = mt.original_ids[m];
            res.mlm -= std::log(std::max(p[target], 1e-300));
            int argmax = 0;
            for (int v = 1; v < model.vocab_size(); ++v) {
                if (p[v] > p[argmax]) argmax = v;
            }
            res.correct += argmax == target ? 1 : 0;
            if (train) {
                // fused softmax+CE gradient, averaged over this sequence's
                // masked positions and scaled by the batch weight
                const real scale = batch_scale / n_masked;
                real* dst = d_logits.row(m);
                for (int v = 0; v < model.vocab_size(); ++v) dst[v] = p[v] * scale;
                dst[target] -= scale;
            }
        }
        res.masked = n_masked;
        res.mlm /= n_masked;
        if (train) {
            const Mat d_masked =
                mlm_decode_backward(model.mlm(), tp, model.config().mlm_logit_scale, mlm_cache,
                                    d_logits, model.embedder().concept_emb->grad);
            for (int m = 0; m < n_masked; ++m) {
                axpy(1.0, d_masked.row(m), d_h.row(mt.positions[m]), d);
            }
        }
    }

    // --- SOP from the [CLS] row
    {
        Mat cls(1, d);
        std::copy(fwd.h.row(0), fwd.h.row(0) + d, cls.row(0));
        TwoLayerCache sop_cache;
        Mat logits = two_layer_decode(cls, model.sop(), &sop_cache);
        Vec z(logits.row(0), logits.row(0) + 3);
        const Vec p = softmax(z);
        Vec onehot(3, 0.0);
        onehot[static_cast<int>(label)] = 1.0;
        res.sop = ce_label_smoothing(onehot, p, cfg.sop_class_weights, cfg.sop_smoothing);
        if (train) {
            const Vec dp = ce_label_smoothing_grad(onehot, p, cfg.sop_class_weights, cfg.sop_smoothing);
            const Vec dz = softmax_backward(p, dp);
            Mat d_logits(1, 3);
            for (int k = 0; k < 3; ++k) d_logits(0, k) = dz[k] * batch_scale;
            const Mat d_cls = two_layer_decode_backward(model.sop(), sop_cache, d_logits);
            axpy(1.0, d_cls.row(0), d_h.row(0), d);
        }
    }

    if (train) model.backward_sequence(seq, fwd, fms, d_h);
    return res;
}

EncodedSequence prepare_eval_sequence(const EncodedSequence& base, const Vocabulary& vocab,
                                      const PretrainConfig& cfg, std::size_t index, MaskTargets& mt,
                                      SopLabel& label) {
    EncodedSequence seq = base;
    Rng rng(derive_seed(cfg.seed, "val", static_cast<std::uint64_t>(index)));
    label = corrupt_order(seq, cfg.sop_corruption_rate, rng);
    mt = mask_sequence(seq, vocab, cfg, rng);
    return seq;
}

}  // namespace

MlmEvaluation evaluate_mlm_sop(Model& model, const std::vector<EncodedSequence>& seqs,
                               const Vocabulary& vocab, const PretrainConfig& cfg) {
    const Vec mean = concept_mean(model.embedder().concept_emb->value);
    const TiedProjection tp = make_tied_projection(model.embedder().concept_emb->value);
    MlmEvaluation ev;
    real mlm_sum = 0.0, sop_sum = 0.0;
    long mlm_seqs = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        MaskTargets mt;
        SopLabel label = SopLabel::original;
        const EncodedSequence seq = prepare_eval_sequence(seqs[i], vocab, cfg, i, mt, label);
        const SeqLossResult r = mlm_sop_pass(model, seq, mt, label, model.eval_feature_maps(), mean,
                                             tp, cfg, /*train=*/false, 0.0);
        if (r.masked > 0) {
            mlm_sum += r.mlm;
            ++mlm_seqs;
            ev.masked_total += r.masked;
            ev.correct += r.correct;
        }
        sop_sum += r.sop;
    }
    ev.mlm_loss = mlm_seqs > 0 ? mlm_sum / mlm_seqs : 0.0;
    ev.sop_loss = seqs.empty() ? 0.0 : sop_sum / static_cast<real>(seqs.size());
    ev.accuracy = ev.masked_total > 0 ? static_cast<real>(ev.correct) / ev.masked_total : 0.0;
    return ev;
}

real unigram_baseline_accuracy(const std::vector<EncodedSequence>& seqs, const Vocabulary& vocab,
                               const PretrainConfig& cfg) {
    // Best constant predictor: the most frequent non-special corpus token.
    int best = kNumSpecial;
    for (int v = kNumSpecial; v < vocab.size(); ++v) {
        if (vocab.frequency_of(v) > vocab.frequency_of(best)) best = v;
    }
    long total = 0, hit = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        MaskTargets mt;
        SopLabel label = SopLabel::original;
        prepare_eval_sequence(seqs[i], vocab, cfg, i, mt, label);
        for (int id : mt.original_ids) {
            ++total;
            hit += id == best ? 1 : 0;
        }
    }
    return total > 0 ? static_cast<real>(hit) / total : 0.0;
}

void write_history_csv(const std::string& path, const PretrainHistory& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "epoch,mlm_loss,sop_loss,perplexity,lr\n";
    char buf[160];
    for (const auto& e : history.epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.train_mlm,
                      e.train_sop, e.val_perplexity, e.lr);
        out << buf;
    }
}

PretrainHistory pretrain(Model& model, const std::vector<EncodedSequence>& train,
                         const std::vector<EncodedSequence>& validation, const Vocabulary& vocab,
                         const PretrainConfig& cfg,
                         const std::function<void(const PretrainEpoch&)>& on_epoch) {
    cfg.validate();
    if (train.empty()) throw ValidationError("pretrain: training corpus is empty");

    const long steps_per_epoch = (cfg.epoch_size + cfg.batch_size - 1) / cfg.batch_size;
    OneCycleSchedule schedule;
    schedule.peak_lr = cfg.peak_lr;
    schedule.total_steps = steps_per_epoch * cfg.epochs;

    AdamWConfig ocfg;
    ocfg.weight_decay = cfg.weight_decay;
    AdamW opt(model.store().all(), ocfg);

    const std::vector<EncodedSequence> val_subset(
        validation.begin(),
        validation.begin() + std::min<std::size_t>(validation.size(), cfg.val_subset));

    PretrainHistory history;
    std::vector<Mat> best_values;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        real mlm_sum = 0.0, sop_sum = 0.0;
        long mlm_seqs = 0, seq_count = 0;
        real last_lr = 0.0;
        for (long s = 0; s < steps_per_epoch; ++s) {
            model.store().zero_grads();
            const Vec mean = concept_mean(model.embedder().concept_emb->value);
            const TiedProjection tp = make_tied_projection(model.embedder().concept_emb->value);
            const FeatureMaps fms = draw_feature_maps(
                model.config().enc, derive_seed(cfg.seed, "favor", static_cast<std::uint64_t>(step)));
            const int batch = static_cast<int>(
                std::min<long>(cfg.batch_size, cfg.epoch_size - s * cfg.batch_size));
            const real batch_scale = 1.0 / batch;
            for (int b = 0; b < batch; ++b) {
                const std::uint64_t item =
                    static_cast<std::uint64_t>(epoch) * cfg.epoch_size + s * cfg.batch_size + b;
                Rng rng(derive_seed(cfg.seed, "sample", item));
                EncodedSequence seq = train[rng.below(train.size())];
                augment(seq, cfg, rng);
                const SopLabel label = corrupt_order(seq, cfg.sop_corruption_rate, rng);
                const MaskTargets mt = mask_sequence(seq, vocab, cfg, rng);
                const SeqLossResult r =
                    mlm_sop_pass(model, seq, mt, label, fms, mean, tp, cfg, true, batch_scale);
                if (r.masked > 0) {
                    mlm_sum += r.mlm;
                    ++mlm_seqs;
                }
                sop_sum += r.sop;
                ++seq_count;
            }
            if (!std::isfinite(mlm_sum) || !std::isfinite(sop_sum)) {
                throw ComputeError("pretrain: loss diverged (NaN/inf) at step " +
                                   std::to_string(step) + " (epoch " + std::to_string(epoch + 1) +
                                   ")");
            }
            clip_grad_norm(opt.params(), cfg.grad_clip);
            last_lr = schedule.lr_at(step);
            opt.step(last_lr);
            ++step;
        }

        const MlmEvaluation ev = evaluate_mlm_sop(model, val_subset, vocab, cfg);
        PretrainEpoch row;
        row.epoch = epoch + 1;
        row.train_mlm = mlm_seqs > 0 ? mlm_sum / mlm_seqs : 0.0;
        row.train_sop = seq_count > 0 ? sop_sum / seq_count : 0.0;
        row.val_mlm = ev.mlm_loss;
        row.val_sop = ev.sop_loss;
        row.val_perplexity = std::exp(cfg.perplexity_mlm_weight * ev.mlm_loss +
                                      cfg.perplexity_sop_weight * ev.sop_loss);
        row.val_mlm_accuracy = ev.accuracy;
        row.lr = last_lr;
        history.epochs.push_back(row);
        if (on_epoch) on_epoch(row);

        if (history.best_epoch < 0 || row.val_perplexity < history.best_perplexity) {
            history.best_epoch = row.epoch;
            history.best_perplexity = row.val_perplexity;
            best_values.clear();
            for (Param* p : model.store().all()) best_values.push_back(p->value);
        }
    }

    // Retain the best-validation checkpoint.
    if (!best_values.empty()) {
        auto params = model.store().all();
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
    }
    return history;
}

}  // namespace lifeseq
