#pragma once

#include <vector>

#include "lifeseq/attention.hpp"
#include "lifeseq/params.hpp"

namespace lifeseq {

struct EncoderConfig {
    int d = 64;
    int n_layers = 2;
    int n_heads = 4;
    int n_local_heads = 3;  // heads [0, n_local) are windowed softmax, the rest FAVOR+
    int local_window = 38;
    int n_random_features = 64;
    int pff_hidden = 256;

    int head_dim() const { return d / n_heads; }
    int n_performer_heads() const { return n_heads - n_local_heads; }
    void validate() const;
};

struct LayerParams {
    Param* norm_attn_g = nullptr;
    Param* wq = nullptr;
    Param* wk = nullptr;
    Param* wv = nullptr;
    Param* wo = nullptr;
    Param* bq = nullptr;
    Param* bk = nullptr;
    Param* bv = nullptr;
    Param* bo = nullptr;
    Param* gate_attn = nullptr;  // ReZero scalar, starts at zero
    Param* norm_pff_g = nullptr;
    Param* w1 = nullptr;
    Param* b1 = nullptr;
    Param* w2 = nullptr;
    Param* b2 = nullptr;
    Param* gate_pff = nullptr;
};

// One FAVOR+ projection per performer head per layer. Training redraws these
// each step; evaluation uses a fixed draw.
struct FeatureMaps {
    std::vector<PerformerFeatureMap> maps;  // n_layers * n_performer_heads, layer-major
    const PerformerFeatureMap& at(int layer, int perf_head, int n_perf) const {
        return maps[static_cast<std::size_t>(layer) * n_perf + perf_head];
    }
};

FeatureMaps draw_feature_maps(const EncoderConfig& cfg, std::uint64_t seed);

struct HeadCache {
    Mat Q, K, V, out;
    Mat weights;          // local heads
    PerformerCache perf;  // performer heads
};

struct BlockCache {
    Mat x_in, n1;
    Vec r1;
    Mat Qf, Kf, Vf;
    std::vector<HeadCache> heads;
    Mat headcat, attn_out, x2, n2;
    Vec r2;
    Mat a1, s1, pff_out;
};

struct EncoderCache {
    std::vector<BlockCache> blocks;
};

// y = g * x / max(|x|, eps) per row; returns row norms for backward.
void scale_norm(const Mat& x, real g, Mat& out, Vec& row_norms);
void scale_norm_backward(const Mat& x, const Vec& row_norms, real g, const Mat& d_out, Mat& dx_acc,
                         real& dg_acc);

// Position-wise feed-forward: swish(x W1 + b1) W2 + b2.
void pff_forward(const Mat& x, const LayerParams& lp, Mat& a1, Mat& s1, Mat& out);
void pff_backward(const Mat& x, const LayerParams& lp, const Mat& a1, const Mat& s1,
                  const Mat& d_out, Mat& dx_acc);

Mat encoder_block_forward(const Mat& x, const LayerParams& lp, const EncoderConfig& cfg,
                          const FeatureMaps& fms, int layer, BlockCache& cache);
Mat encoder_block_backward(const Mat& d_y, const LayerParams& lp, const EncoderConfig& cfg,
                           const FeatureMaps& fms, int layer, const BlockCache& cache);

Mat encoder_forward(const Mat& x, const std::vector<LayerParams>& layers, const EncoderConfig& cfg,
                    const FeatureMaps& fms, EncoderCache& cache);
Mat encoder_backward(const Mat& d_y, const std::vector<LayerParams>& layers,
                     const EncoderConfig& cfg, const FeatureMaps& fms, const EncoderCache& cache);

}  // namespace lifeseq
