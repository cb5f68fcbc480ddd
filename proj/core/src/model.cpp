#include "lifeseq/model.hpp"

#include <cmath>

#include "lifeseq/rng.hpp"

namespace lifeseq {

std::uint64_t ModelConfig::hash() const {
    std::string s = std::to_string(enc.d) + "|" + std::to_string(enc.n_layers) + "|" +
                    std::to_string(enc.n_heads) + "|" + std::to_string(enc.n_local_heads) + "|" +
                    std::to_string(enc.local_window) + "|" + std::to_string(enc.n_random_features) +
                    "|" + std::to_string(enc.pff_hidden) + "|" + std::to_string(max_len) + "|" +
                    std::to_string(mlm_logit_scale);
    return fnv1a64(s);
}

namespace {

void init_gaussian(Mat& m, Rng& rng, real stddev) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
}

}  // namespace

Model::Model(ModelConfig cfg, int vocab_size) : cfg_(cfg), vocab_size_(vocab_size) {
    cfg_.enc.validate();
    if (vocab_size <= kNumSpecial) {
        throw ValidationError("model: vocabulary must contain non-special tokens");
    }
    const int d = cfg_.enc.d;
    const int n_layers = cfg_.enc.n_layers;
    const int emb_group = n_layers + 1;
    Rng rng(derive_seed(cfg_.init_seed, "init"));
    const real s = 1.0 / std::sqrt(static_cast<real>(d));

    emb_.concept_emb = &store_.add("emb.concept", vocab_size, d, emb_group);
    emb_.age_omega = &store_.add("emb.age.omega", 1, d, emb_group);
    emb_.age_phi = &store_.add("emb.age.phi", 1, d, emb_group);
    emb_.pos_omega = &store_.add("emb.pos.omega", 1, d, emb_group);
    emb_.pos_phi = &store_.add("emb.pos.phi", 1, d, emb_group);
    emb_.segment_emb = &store_.add("emb.segment", 3, d, emb_group);
    emb_.mix = &store_.add("emb.mix", 1, 3, emb_group);  // starts at zero
    init_gaussian(emb_.concept_emb->value, rng, s);
    init_gaussian(emb_.age_omega->value, rng, s);
    init_gaussian(emb_.age_phi->value, rng, s);
    init_gaussian(emb_.pos_omega->value, rng, s);
    init_gaussian(emb_.pos_phi->value, rng, s);
    init_gaussian(emb_.segment_emb->value, rng, s);

    layers_.resize(n_layers);
    const real sh = 1.0 / std::sqrt(static_cast<real>(cfg_.enc.pff_hidden));
    for (int l = 0; l < n_layers; ++l) {
        // Layer-wise LR groups count from the top: the block feeding the
        // decoder is group 1, the block nearest the input is group n_layers.
        const int group = n_layers - l;
        const std::string p = "enc." + std::to_string(l) + ".";
        LayerParams& lp = layers_[l];
        lp.norm_attn_g = &store_.add(p + "norm_attn.g", 1, 1, group);
        lp.norm_attn_g->value(0, 0) = std::sqrt(static_cast<real>(d));
        lp.wq = &store_.add(p + "attn.wq", d, d, group);
        lp.wk = &store_.add(p + "attn.wk", d, d, group);
        lp.wv = &store_.add(p + "attn.wv", d, d, group);
        lp.wo = &store_.add(p + "attn.wo", d, d, group);
        lp.bq = &store_.add(p + "attn.bq", 1, d, group);
        lp.bk = &store_.add(p + "attn.bk", 1, d, group);
        lp.bv = &store_.add(p + "attn.bv", 1, d, group);
        lp.bo = &store_.add(p + "attn.bo", 1, d, group);
        lp.gate_attn = &store_.add(p + "gate_attn", 1, 1, group);  // ReZero: zero
        lp.norm_pff_g = &store_.add(p + "norm_pff.g", 1, 1, group);
        lp.norm_pff_g->value(0, 0) = std::sqrt(static_cast<real>(d));
        lp.w1 = &store_.add(p + "pff.w1", d, cfg_.enc.pff_hidden, group);
        lp.b1 = &store_.add(p + "pff.b1", 1, cfg_.enc.pff_hidden, group);
        lp.w2 = &store_.add(p + "pff.w2", cfg_.enc.pff_hidden, d, group);
        lp.b2 = &store_.add(p + "pff.b2", 1, d, group);
        lp.gate_pff = &store_.add(p + "gate_pff", 1, 1, group);  // ReZero: zero
        init_gaussian(lp.wq->value, rng, s);
        init_gaussian(lp.wk->value, rng, s);
        init_gaussian(lp.wv->value, rng, s);
        init_gaussian(lp.wo->value, rng, s);
        init_gaussian(lp.w1->value, rng, s);
        init_gaussian(lp.w2->value, rng, sh);
    }

    mlm_.w1 = &store_.add("mlm.w1", d, d, 0);
    mlm_.b1 = &store_.add("mlm.b1", 1, d, 0);
    init_gaussian(mlm_.w1->value, rng, s);

    sop_.w1 = &store_.add("sop.w1", d, d, 0);
    sop_.b1 = &store_.add("sop.b1", 1, d, 0);
    sop_.norm_g = &store_.add("sop.norm.g", 1, 1, 0);
    sop_.norm_g->value(0, 0) = std::sqrt(static_cast<real>(d));
    sop_.w2 = &store_.add("sop.w2", d, 3, 0);
    sop_.b2 = &store_.add("sop.b2", 1, 3, 0);
    init_gaussian(sop_.w1->value, rng, s);
    init_gaussian(sop_.w2->value, rng, s);

    pooled_.w1 = &store_.add("pooled.w1", d, d, 0);
    pooled_.b1 = &store_.add("pooled.b1", 1, d, 0);
    pooled_.ctx = &store_.add("pooled.ctx", 1, d, 0);
    pooled_.w2 = &store_.add("pooled.w2", d, d, 0);
    pooled_.b2 = &store_.add("pooled.b2", 1, d, 0);
    pooled_.w3 = &store_.add("pooled.w3", d, 2, 0);
    pooled_.b3 = &store_.add("pooled.b3", 1, 2, 0);
    init_gaussian(pooled_.w1->value, rng, s);
    init_gaussian(pooled_.ctx->value, rng, s);
    init_gaussian(pooled_.w2->value, rng, s);
    init_gaussian(pooled_.w3->value, rng, s);

    ordinal_.w1 = &store_.add("ord.w1", d, d, 0);
    ordinal_.b1 = &store_.add("ord.b1", 1, d, 0);
    ordinal_.norm_g = &store_.add("ord.norm.g", 1, 1, 0);
    ordinal_.norm_g->value(0, 0) = std::sqrt(static_cast<real>(d));
    ordinal_.w2 = &store_.add("ord.w2", d, 20, 0);  // 4 items x 5 levels
    ordinal_.b2 = &store_.add("ord.b2", 1, 20, 0);
    init_gaussian(ordinal_.w1->value, rng, s);
    init_gaussian(ordinal_.w2->value, rng, s);

    eval_maps_ = draw_feature_maps(cfg_.enc, derive_seed(cfg_.init_seed, "eval-favor"));
}

Model::SeqForward Model::forward_sequence(const EncodedSequence& seq, const FeatureMaps& fms,
                                          const Vec& concept_mean_vec) const {
    SeqForward f;
    f.len = seq.length();
    if (f.len == 0) throw ValidationError("forward_sequence: sequence is empty");
    f.x0 = embed_sequence(seq, emb_, concept_mean_vec, f.len);
    f.h = encoder_forward(f.x0, layers_, cfg_.enc, fms, f.enc);
    return f;
}

void Model::backward_sequence(const EncodedSequence& seq, const SeqForward& fwd,
                              const FeatureMaps& fms, const Mat& d_h) {
    const Mat d_x0 = encoder_backward(d_h, layers_, cfg_.enc, fms, fwd.enc);
    embed_sequence_backward(seq, emb_, d_x0, fwd.len);
}

void Model::backward_embedding(const EncodedSequence& seq, const SeqForward& fwd, const Mat& d_x0) {
    embed_sequence_backward(seq, emb_, d_x0, fwd.len);
}

Mat Model::encoder_input_gradient(const SeqForward& fwd, const FeatureMaps& fms, const Mat& d_h,
                                  bool accumulate_params) {
    if (accumulate_params) {
        return encoder_backward(d_h, layers_, cfg_.enc, fms, fwd.enc);
    }
    // Run the same backward against scratch gradient buffers.
    std::vector<Mat> saved;
    auto params = store_.all();
    saved.reserve(params.size());
    for (Param* p : params) saved.push_back(p->grad);
    Mat d_x0 = encoder_backward(d_h, layers_, cfg_.enc, fms, fwd.enc);
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->grad = std::move(saved[i]);
    return d_x0;
}

}  // namespace lifeseq
