#include "lifeseq/optim.hpp"

#include <cmath>

namespace lifeseq {

real OneCycleSchedule::lr_at(long step) const {
    const real t = static_cast<real>(step) / static_cast<real>(std::max<long>(total_steps, 1));
    const real floor_lr = peak_lr * final_fraction;
    if (t < warmup_fraction) {
        const real u = t / warmup_fraction;
        return floor_lr + (peak_lr - floor_lr) * u;
    }
    const real u = std::min((t - warmup_fraction) / std::max(1.0 - warmup_fraction, 1e-12), 1.0);
    return floor_lr + 0.5 * (peak_lr - floor_lr) * (1.0 + std::cos(3.14159265358979323846 * u));
}

real ExponentialSchedule::rate_at(real base_lr, long epoch) const {
    return base_lr * std::pow(gamma, static_cast<real>(epoch));
}

AdamW::AdamW(std::vector<Param*> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (const Param* p : params_) {
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
        rate_scale_.push_back(1.0);
        weight_decay_.push_back(cfg_.weight_decay);
    }
}

void AdamW::step(real lr) {
    ++t_;
    const real bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<real>(t_));
    const real bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<real>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param& p = *params_[i];
        if (p.frozen) continue;
        const real rate = lr * rate_scale_[i];
        real* w = p.value.data();
        const real* g = p.grad.data();
        real* m = m_[i].data();
        real* v = v_[i].data();
        const std::size_t n = p.value.size();
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
            v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
            const real mhat = m[k] / bc1;
            const real vhat = v[k] / bc2;
            w[k] -= rate * (mhat / (std::sqrt(vhat) + cfg_.eps) + weight_decay_[i] * w[k]);
        }
    }
}

RAdam::RAdam(std::vector<Param*> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (const Param* p : params_) {
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
        rate_scale_.push_back(1.0);
        weight_decay_.push_back(cfg_.weight_decay);
    }
}

void RAdam::step(real lr) {
    ++t_;
    const real t = static_cast<real>(t_);
    const real beta2t = std::pow(cfg_.beta2, t);
    const real rho_inf = 2.0 / (1.0 - cfg_.beta2) - 1.0;
    const real rho = rho_inf - 2.0 * t * beta2t / (1.0 - beta2t);
    const real bc1 = 1.0 - std::pow(cfg_.beta1, t);
    real rect = 0.0;
    const bool rectified = rho > 4.0;
    if (rectified) {
        rect = std::sqrt((rho - 4.0) * (rho - 2.0) * rho_inf /
                         ((rho_inf - 4.0) * (rho_inf - 2.0) * rho));
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param& p = *params_[i];
        if (p.frozen) continue;
        const real rate = lr * rate_scale_[i];
        real* w = p.value.data();
        const real* g = p.grad.data();
        real* m = m_[i].data();
        real* v = v_[i].data();
        const std::size_t n = p.value.size();
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
            v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
            const real mhat = m[k] / bc1;
            real update;
            if (rectified) {
                const real vhat = std::sqrt(v[k] / (1.0 - beta2t));
                update = rect * mhat / (vhat + cfg_.eps);
            } else {
                update = mhat;
            }
            w[k] -= rate * (update + weight_decay_[i] * w[k]);
        }
    }
}

real clip_grad_norm(const std::vector<Param*>& params, real max_norm) {
    real sq = 0.0;
    for (const Param* p : params) {
        if (p->frozen) continue;
        const real* g = p->grad.data();
        for (std::size_t k = 0; k < p->grad.size(); ++k) sq += g[k] * g[k];
    }
    const real norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const real scale = max_norm / (norm + 1e-12);
        for (Param* p : params) {
            if (p->frozen) continue;
            scale_inplace(p->grad, scale);
        }
    }
    return norm;
}

}  // namespace lifeseq
