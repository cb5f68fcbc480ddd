#pragma once

#include <functional>
#include <map>

#include "lifeseq/config.hpp"
#include "lifeseq/embedder.hpp"
#include "lifeseq/heads.hpp"
#include "lifeseq/losses.hpp"
#include "lifeseq/model.hpp"
#include "lifeseq/person_io.hpp"
#include "lifeseq/pretrain.hpp"
#include "lifeseq/rng.hpp"

namespace lifeseq::test {

inline GeneratorConfig tiny_generator(int population, std::uint64_t seed) {
    GeneratorConfig g;
    g.population_size = population;
    g.events_per_person = {15.0, 0.3};
    g.seed = seed;
    return g;
}

inline ModelConfig tiny_model_config(int vocab_hint = 0, int d = 16, int layers = 2) {
    (void)vocab_hint;
    ModelConfig m;
    m.enc.d = d;
    m.enc.n_layers = layers;
    m.enc.n_heads = 2;
    m.enc.n_local_heads = 1;
    m.enc.local_window = 6;
    m.enc.n_random_features = 8;
    m.enc.pff_hidden = 3 * d / 2;
    m.max_len = 64;
    m.init_seed = 11;
    return m;
}

// A generic parameter point: every tensor (gates and mix included) gets small
// random values so no code path is multiplied away.
inline void randomize_params(Model& model, std::uint64_t seed, real scale = 0.3) {
    Rng rng(seed);
    for (Param* p : model.store().all()) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            p->value.data()[i] = rng.normal(0.0, scale);
        }
    }
}

struct GradCheckResult {
    real worst = 0.0;
    std::map<std::string, real> per_param;
};

// Central finite differences against the analytic gradients already stored in
// the parameter grad buffers. One fixed step cannot serve every coordinate
// here (time2vec frequencies multiply day counts in the thousands, saturated
// tanh paths have vanishing gradients), so each entry picks its step by the
// plateau rule: evaluate a ladder of step sizes and keep the difference where
// consecutive estimates agree best. The selection never looks at the analytic
// value. Relative error is normalized per tensor by the largest gradient
// magnitude seen on either side.
inline GradCheckResult gradient_check(Model& model, const std::function<real()>& loss_fn,
                                      int max_entries_per_param = 24,
                                      std::uint64_t sample_seed = 123) {
    static constexpr real kSteps[] = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
    GradCheckResult res;
    Rng rng(sample_seed);
    const real loss_scale = std::fabs(loss_fn());
    for (Param* p : model.store().all()) {
        const std::size_t n = p->value.size();
        std::vector<std::size_t> entries;
        if (static_cast<int>(n) <= max_entries_per_param) {
            for (std::size_t i = 0; i < n; ++i) entries.push_back(i);
        } else {
            for (int k = 0; k < max_entries_per_param; ++k) entries.push_back(rng.below(n));
        }
        real max_abs_grad = 1e-10;
        real max_abs_diff = 0.0;
        for (std::size_t i : entries) {
            const real saved = p->value.data()[i];
            const real scale = std::max(1.0, std::fabs(saved));
            real estimates[std::size(kSteps)];
            for (std::size_t k = 0; k < std::size(kSteps); ++k) {
                const real step = kSteps[k] * scale;
                p->value.data()[i] = saved + step;
                const real lp = loss_fn();
                p->value.data()[i] = saved - step;
                const real lm = loss_fn();
                p->value.data()[i] = saved;
                estimates[k] = (lp - lm) / (2.0 * step);
            }
            // Score each adjacent pair by its disagreement plus the rounding
            // noise expected at the smaller step; the noise term stops pairs
            // of identically-quantized tiny-step estimates from winning.
            std::size_t best = 0;
            real best_score = -1.0;
            for (std::size_t k = 0; k + 1 < std::size(kSteps); ++k) {
                const real gap = std::fabs(estimates[k + 1] - estimates[k]);
                const real noise = 2.2e-16 * loss_scale / (kSteps[k + 1] * scale);
                const real score = gap + noise;
                if (best_score < 0.0 || score < best_score) {
                    best_score = score;
                    best = k;
                }
            }
            const real numeric = estimates[best + 1];
            const real analytic = p->grad.data()[i];
            max_abs_grad = std::max({max_abs_grad, std::fabs(analytic), std::fabs(numeric)});
            max_abs_diff = std::max(max_abs_diff, std::fabs(analytic - numeric));
        }
        const real rel = max_abs_diff / max_abs_grad;
        res.per_param[p->name] = rel;
        res.worst = std::max(res.worst, rel);
    }
    return res;
}

// Composite loss touching every parameter class: MLM CE at two masked
// positions, SOP smoothed CE, asymmetric PU CE over two pooled sequences, and
// the combined ordinal loss, all through the full trunk.
struct CompositeLoss {
    Model& model;
    std::vector<EncodedSequence> seqs;  // >= 2
    std::vector<int> mask_positions{6, 8};
    PersonalityLossConfig ploss;
    Vec sop_weights{1.1, 10.0, 10.0};

    real operator()() const {
        const Vec mean = concept_mean(model.embedder().concept_emb->value);
        const TiedProjection tp = make_tied_projection(model.embedder().concept_emb->value);
        real loss = 0.0;
        Mat logits2(2, 2);
        for (int s = 0; s < 2; ++s) {
            const auto fwd = model.forward_sequence(seqs[s], model.eval_feature_maps(), mean);
            const int d = model.hidden();

            Mat rows(static_cast<int>(mask_positions.size()), d);
            for (std::size_t m = 0; m < mask_positions.size(); ++m) {
                std::copy(fwd.h.row(mask_positions[m]), fwd.h.row(mask_positions[m]) + d,
                          rows.row(static_cast<int>(m)));
            }
            const Mat ml = mlm_decode(rows, const_cast<Model&>(model).mlm(), tp,
                                      model.config().mlm_logit_scale);
            for (int m = 0; m < ml.rows(); ++m) {
                const Vec z(ml.row(m), ml.row(m) + model.vocab_size());
                const Vec p = softmax(z);
                Vec onehot(model.vocab_size(), 0.0);
                onehot[kNumSpecial + m + s] = 1.0;
                loss += cross_entropy(onehot, p);
            }

            Mat cls(1, d);
            std::copy(fwd.h.row(0), fwd.h.row(0) + d, cls.row(0));
            const Mat sl = two_layer_decode(cls, const_cast<Model&>(model).sop());
            {
                const Vec z(sl.row(0), sl.row(0) + 3);
                const Vec p = softmax(z);
                Vec onehot(3, 0.0);
                onehot[s % 3] = 1.0;
                loss += ce_label_smoothing(onehot, p, sop_weights, 0.1);
            }

            const PooledOutput po = pooled_decode(fwd.h, const_cast<Model&>(model).pooled());
            logits2(s, 0) = po.logits(0, 0);
            logits2(s, 1) = po.logits(0, 1);

            const Mat ol = two_layer_decode(cls, const_cast<Model&>(model).ordinal());
            for (int item = 0; item < 4; ++item) {
                const Vec z(ol.row(0) + item * 5, ol.row(0) + item * 5 + 5);
                const Vec p = sigsoftmax(z);
                loss += combined_personality_loss((item + s) % 5, p, ploss) / 4.0;
            }
        }
        loss += asymmetric_ce(logits2, 1, 0.5);
        return loss;
    }

    // Analytic backward of exactly the same computation.
    void backward() {
        model.store().zero_grads();
        const Vec mean = concept_mean(model.embedder().concept_emb->value);
        const TiedProjection tp = make_tied_projection(model.embedder().concept_emb->value);
        Mat logits2(2, 2);
        std::vector<Model::SeqForward> fwds(2);
        std::vector<PooledCache> pcaches(2);
        std::vector<TwoLayerCache> scaches(2), ocaches(2);
        std::vector<MlmCache> mcaches(2);
        std::vector<Mat> mlogits(2), slogits(2), ologits(2);
        const int d = model.hidden();
        for (int s = 0; s < 2; ++s) {
            fwds[s] = model.forward_sequence(seqs[s], model.eval_feature_maps(), mean);
            Mat rows(static_cast<int>(mask_positions.size()), d);
            for (std::size_t m = 0; m < mask_positions.size(); ++m) {
                std::copy(fwds[s].h.row(mask_positions[m]), fwds[s].h.row(mask_positions[m]) + d,
                          rows.row(static_cast<int>(m)));
            }
            mlogits[s] = mlm_decode(rows, model.mlm(), tp, model.config().mlm_logit_scale,
                                    &mcaches[s]);
            Mat cls(1, d);
            std::copy(fwds[s].h.row(0), fwds[s].h.row(0) + d, cls.row(0));
            slogits[s] = two_layer_decode(cls, model.sop(), &scaches[s]);
            const PooledOutput po = pooled_decode(fwds[s].h, model.pooled(), &pcaches[s]);
            logits2(s, 0) = po.logits(0, 0);
            logits2(s, 1) = po.logits(0, 1);
            ologits[s] = two_layer_decode(cls, model.ordinal(), &ocaches[s]);
        }
        const Mat dlogits2 = asymmetric_ce_grad(logits2, 1, 0.5);

        for (int s = 0; s < 2; ++s) {
            Mat dh(fwds[s].len, d);

            Mat dml(mlogits[s].rows(), mlogits[s].cols());
            for (int m = 0; m < mlogits[s].rows(); ++m) {
                const Vec z(mlogits[s].row(m), mlogits[s].row(m) + model.vocab_size());
                const Vec p = softmax(z);
                Vec onehot(model.vocab_size(), 0.0);
                onehot[kNumSpecial + m + s] = 1.0;
                const Vec dp = cross_entropy_grad(onehot, p);
                const Vec dz = softmax_backward(p, dp);
                std::copy(dz.begin(), dz.end(), dml.row(m));
            }
            const Mat drows = mlm_decode_backward(model.mlm(), tp, model.config().mlm_logit_scale,
                                                  mcaches[s], dml,
                                                  model.embedder().concept_emb->grad);
            for (std::size_t m = 0; m < mask_positions.size(); ++m) {
                axpy(1.0, drows.row(static_cast<int>(m)), dh.row(mask_positions[m]), d);
            }

            {
                const Vec z(slogits[s].row(0), slogits[s].row(0) + 3);
                const Vec p = softmax(z);
                Vec onehot(3, 0.0);
                onehot[s % 3] = 1.0;
                const Vec dp = ce_label_smoothing_grad(onehot, p, sop_weights, 0.1);
                const Vec dz = softmax_backward(p, dp);
                Mat dsl(1, 3);
                std::copy(dz.begin(), dz.end(), dsl.row(0));
                const Mat dcls = two_layer_decode_backward(model.sop(), scaches[s], dsl);
                axpy(1.0, dcls.row(0), dh.row(0), d);
            }

            {
                Mat dol(1, 20);
                for (int item = 0; item < 4; ++item) {
                    const Vec z(ologits[s].row(0) + item * 5, ologits[s].row(0) + item * 5 + 5);
                    const Vec p = sigsoftmax(z);
                    Vec dp = combined_personality_loss_grad((item + s) % 5, p, ploss);
                    for (real& v : dp) v /= 4.0;
                    const Vec dz = sigsoftmax_backward(z, p, dp);
                    std::copy(dz.begin(), dz.end(), dol.row(0) + item * 5);
                }
                const Mat dcls = two_layer_decode_backward(model.ordinal(), ocaches[s], dol);
                axpy(1.0, dcls.row(0), dh.row(0), d);
            }

            Mat dpl(1, 2);
            dpl(0, 0) = dlogits2(s, 0);
            dpl(0, 1) = dlogits2(s, 1);
            const Mat dph = pooled_decode_backward(model.pooled(), pcaches[s], dpl);
            add_inplace(dh, dph);

            model.backward_sequence(seqs[s], fwds[s], model.eval_feature_maps(), dh);
        }
    }
};

// Tiny corpus + encoded sequences for model-level tests.
struct TinyWorld {
    GeneratorConfig gen;
    std::vector<PersonRecord> people;
    std::vector<OutcomeRecord> outcomes;
    Vocabulary vocab;
    TokenizerConfig tok;
    std::vector<EncodedSequence> seqs;
};

inline TinyWorld tiny_world(int population = 40, std::uint64_t seed = 5, int max_len = 64) {
    TinyWorld w;
    w.gen = tiny_generator(population, seed);
    w.people = generate_population(w.gen);
    w.outcomes = assign_outcomes(w.people, w.gen);
    w.vocab = Vocabulary::build(w.people, 1);
    w.tok.max_len = max_len;
    w.tok.origin_date = w.gen.start_date;
    for (const auto& p : w.people) w.seqs.push_back(encode_person(p, w.vocab, w.tok));
    return w;
}

}  // namespace lifeseq::test
