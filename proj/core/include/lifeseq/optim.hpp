#pragma once

#include <vector>

#include "lifeseq/params.hpp"

namespace lifeseq {

// One-cycle schedule: linear warmup to peak_lr over warmup_fraction of the
// run, then cosine anneal down to peak_lr * final_fraction.
struct OneCycleSchedule {
    real peak_lr = 1e-3;
    real warmup_fraction = 0.1;
    real final_fraction = 0.04;
    long total_steps = 1;

    real lr_at(long step) const;
};

// Multiplies the base rate by gamma^epoch.
struct ExponentialSchedule {
    real gamma = 0.8;
    real rate_at(real base_lr, long epoch) const;
};

struct AdamWConfig {
    real beta1 = 0.9;
    real beta2 = 0.999;
    real eps = 1e-8;
    real weight_decay = 0.01;
};

// Decoupled-weight-decay adaptive optimizer. Per-parameter relative learning
// rates support the finetuning ladder (rate = lr * rate_scale per tensor).
class AdamW {
public:
    AdamW(std::vector<Param*> params, AdamWConfig cfg);

    // Per-tensor multipliers / weight-decay overrides (parallel to params()).
    void set_rate_scale(std::size_t i, real scale) { rate_scale_[i] = scale; }
    void set_weight_decay(std::size_t i, real wd) { weight_decay_[i] = wd; }
    real rate_scale(std::size_t i) const { return rate_scale_[i]; }
    real applied_lr(std::size_t i, real lr) const { return lr * rate_scale_[i]; }

    void step(real lr);
    const std::vector<Param*>& params() const { return params_; }

private:
    std::vector<Param*> params_;
    AdamWConfig cfg_;
    std::vector<Mat> m_, v_;
    std::vector<real> rate_scale_, weight_decay_;
    long t_ = 0;
};

// Rectified Adam: warms the adaptive term in by tracking the variance
// rectification; falls back to SGD-with-momentum while rho <= 4.
class RAdam {
public:
    RAdam(std::vector<Param*> params, AdamWConfig cfg);

    void set_rate_scale(std::size_t i, real scale) { rate_scale_[i] = scale; }
    void set_weight_decay(std::size_t i, real wd) { weight_decay_[i] = wd; }
    real rate_scale(std::size_t i) const { return rate_scale_[i]; }
    real applied_lr(std::size_t i, real lr) const { return lr * rate_scale_[i]; }

    void step(real lr);
    const std::vector<Param*>& params() const { return params_; }

private:
    std::vector<Param*> params_;
    AdamWConfig cfg_;
    std::vector<Mat> m_, v_;
    std::vector<real> rate_scale_, weight_decay_;
    long t_ = 0;
};

// Global gradient-norm clipping; returns the pre-clip norm.
real clip_grad_norm(const std::vector<Param*>& params, real max_norm);

}  // namespace lifeseq
