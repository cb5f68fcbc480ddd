#pragma once

#include <memory>

#include "lifeseq/embedder.hpp"
#include "lifeseq/encoder.hpp"
#include "lifeseq/heads.hpp"
#include "lifeseq/params.hpp"
#include "lifeseq/vocab.hpp"

namespace lifeseq {

struct ModelConfig {
    EncoderConfig enc;
    int max_len = 256;
    real mlm_logit_scale = 10.0;  // cosine-logit sharpening in the MLM decoder
    std::uint64_t init_seed = 0;

    std::uint64_t hash() const;
};

// All trainable state plus the wiring between blocks. Construction assigns
// ids, shapes, layer-wise learning-rate groups and the seeded initialization.
class Model {
public:
    Model(ModelConfig cfg, int vocab_size);

    const ModelConfig& config() const { return cfg_; }
    int vocab_size() const { return vocab_size_; }
    int hidden() const { return cfg_.enc.d; }

    ParamStore& store() { return store_; }
    const EmbedderParams& embedder() const { return emb_; }
    EmbedderParams& embedder() { return emb_; }
    const std::vector<LayerParams>& layers() const { return layers_; }
    MlmHead& mlm() { return mlm_; }
    TwoLayerHead& sop() { return sop_; }
    PooledHead& pooled() { return pooled_; }
    TwoLayerHead& ordinal() { return ordinal_; }

    // Fixed FAVOR+ projections used outside training steps.
    const FeatureMaps& eval_feature_maps() const { return eval_maps_; }

    // Embedding + encoder trunk over the non-pad prefix of a sequence.
    struct SeqForward {
        int len = 0;  // effective (non-pad) length
        Mat x0;       // input embeddings
        EncoderCache enc;
        Mat h;        // contextual output
    };

    SeqForward forward_sequence(const EncodedSequence& seq, const FeatureMaps& fms,
                                const Vec& concept_mean_vec) const;
    // Pushes d(loss)/d(contextual) back to every parameter.
    void backward_sequence(const EncodedSequence& seq, const SeqForward& fwd,
                           const FeatureMaps& fms, const Mat& d_h);
    // As above but for a gradient arriving at the input embeddings.
    void backward_embedding(const EncodedSequence& seq, const SeqForward& fwd, const Mat& d_x0);

    // Encoder backward only: returns d(loss)/d(input embeddings) without
    // accumulating embedder gradients (saliency needs the input gradient).
    Mat encoder_input_gradient(const SeqForward& fwd, const FeatureMaps& fms, const Mat& d_h,
                               bool accumulate_params);

private:
    ModelConfig cfg_;
    int vocab_size_;
    ParamStore store_;
    EmbedderParams emb_;
    std::vector<LayerParams> layers_;
    MlmHead mlm_;
    TwoLayerHead sop_;
    PooledHead pooled_;
    TwoLayerHead ordinal_;
    FeatureMaps eval_maps_;
};

}  // namespace lifeseq
