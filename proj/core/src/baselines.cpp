#include "lifeseq/baselines.hpp"

#include <cmath>

#include "lifeseq/finetune.hpp"
#include "lifeseq/losses.hpp"
#include "lifeseq/matrix.hpp"
#include "lifeseq/rng.hpp"

namespace lifeseq {

namespace {

real swish(real x) { return x / (1.0 + std::exp(-x)); }
real swish_grad(real x) {
    const real s = 1.0 / (1.0 + std::exp(-x));
    return s + x * s * (1.0 - s);
}

}  // namespace

BaselineInputs life_table_inputs(const std::vector<PersonRecord>& people,
                                 const std::vector<std::uint8_t>& labels, const Date& end_date) {
    BaselineInputs out;
    out.features = Mat(static_cast<int>(people.size()), 2);
    out.labels = labels;
    for (std::size_t i = 0; i < people.size(); ++i) {
        const real age = completed_years(people[i].birth_year, people[i].birth_month, end_date);
        out.features(static_cast<int>(i), 0) = (age - 45.0) / 10.0;
        out.features(static_cast<int>(i), 1) = people[i].sex == 1 ? 1.0 : 0.0;
    }
    return out;
}

BaselineInputs count_vector_inputs(const std::vector<PersonRecord>& people,
                                   const std::vector<std::uint8_t>& labels, const Vocabulary& vocab,
                                   const TokenizerConfig& tok_cfg, const Date& end_date) {
    BaselineInputs out;
    out.features = Mat(static_cast<int>(people.size()), vocab.size());
    out.labels = labels;
    const long cutoff = days_from_civil(end_date) - 365;
    for (std::size_t i = 0; i < people.size(); ++i) {
        PersonRecord filtered = people[i];
        filtered.events.clear();
        for (const auto& ev : people[i].events) {
            if (days_from_civil(ev.date) >= cutoff) filtered.events.push_back(ev);
        }
        const EncodedSequence seq = encode_person(filtered, vocab, tok_cfg);
        const std::vector<long> counts = count_vector(seq, vocab);
        for (int v = 0; v < vocab.size(); ++v) {
            out.features(static_cast<int>(i), v) = static_cast<real>(counts[v]);
        }
    }
    return out;
}

struct FfnnModel::Acts {
    std::vector<Vec> pre;   // pre-activation per hidden layer
    std::vector<Vec> post;  // post-activation (input stored at index 0)
};

FfnnModel::FfnnModel(int input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
    dims_.push_back(input_dim);
    for (int h : hidden) dims_.push_back(h);
    dims_.push_back(1);  // scalar logit
    Rng rng(derive_seed(seed, "baseline-init"));
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        Mat w(dims_[l], dims_[l + 1]);
        const real s = 1.0 / std::sqrt(static_cast<real>(dims_[l]));
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(0.0, s);
        weights_.push_back(std::move(w));
        biases_.emplace_back(dims_[l + 1], 0.0);
    }
}

long FfnnModel::parameter_count() const {
    long n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        n += static_cast<long>(weights_[l].size()) + static_cast<long>(biases_[l].size());
    }
    return n;
}

real FfnnModel::forward(const real* x, Acts* acts) const {
    Vec cur(x, x + dims_[0]);
    if (acts) {
        acts->pre.clear();
        acts->post.clear();
        acts->post.push_back(cur);
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const Mat& w = weights_[l];
        Vec next(static_cast<std::size_t>(w.cols()), 0.0);
        for (int i = 0; i < w.rows(); ++i) {
            if (cur[i] == 0.0) continue;
            axpy(cur[i], w.row(i), next.data(), w.cols());
        }
        for (int j = 0; j < w.cols(); ++j) next[j] += biases_[l][j];
        const bool last = l + 1 == weights_.size();
        if (acts) acts->pre.push_back(next);
        if (!last) {
            for (real& v : next) v = swish(v);
        }
        if (acts) acts->post.push_back(next);
        cur = std::move(next);
    }
    return cur[0];
}

void FfnnModel::backward(const Acts& acts, real dz, std::vector<Mat>& gw,
                         std::vector<Vec>& gb) const {
    Vec delta(1, dz);
    for (int l = static_cast<int>(weights_.size()) - 1; l >= 0; --l) {
        const Mat& w = weights_[l];
        const Vec& input = acts.post[l];
        for (int i = 0; i < w.rows(); ++i) {
            if (input[i] == 0.0) continue;
            axpy(input[i], delta.data(), gw[l].row(i), w.cols());
        }
        for (int j = 0; j < w.cols(); ++j) gb[l][j] += delta[j];
        if (l == 0) break;
        Vec prev(static_cast<std::size_t>(w.rows()), 0.0);
        for (int i = 0; i < w.rows(); ++i) prev[i] = dot(w.row(i), delta.data(), w.cols());
        const Vec& pre = acts.pre[l - 1];
        for (int i = 0; i < w.rows(); ++i) prev[i] *= swish_grad(pre[i]);
        delta = std::move(prev);
    }
}

real FfnnModel::score_logit(const real* x) const { return forward(x, nullptr); }

real FfnnModel::score(const real* x) const {
    const Vec p = sigsoftmax({0.0, score_logit(x)});
    return p[1];
}

void FfnnModel::train(const BaselineInputs& data, const BaselineConfig& cfg) {
    PuBatchSampler sampler = PuBatchSampler::make(data.labels, cfg.seed);
    const long steps_per_epoch = std::max<long>(1, cfg.epoch_size / cfg.batch_size);
    std::vector<Mat> gw;
    std::vector<Vec> gb;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        gw.emplace_back(weights_[l].rows(), weights_[l].cols());
        gb.emplace_back(biases_[l].size(), 0.0);
    }
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (long s = 0; s < steps_per_epoch; ++s, ++step) {
            int n_pos = 0;
            const std::vector<int> batch = sampler.batch(step, cfg.batch_size, n_pos);
            const int n = static_cast<int>(batch.size());
            Mat logits(n, 2);
            std::vector<Acts> acts(n);
            for (int b = 0; b < n; ++b) {
                logits(b, 0) = 0.0;
                logits(b, 1) = forward(data.features.row(batch[b]), &acts[b]);
            }
            const Mat dlogits = asymmetric_ce_grad(logits, n_pos, cfg.asymmetric_c);
            for (auto& g : gw) g.zero();
            for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
            for (int b = 0; b < n; ++b) backward(acts[b], dlogits(b, 1), gw, gb);
            // plain SGD step with ridge penalty on the weights
            for (std::size_t l = 0; l < weights_.size(); ++l) {
                real* w = weights_[l].data();
                const real* g = gw[l].data();
                for (std::size_t i = 0; i < weights_[l].size(); ++i) {
                    w[i] -= cfg.lr * (g[i] + cfg.ridge * w[i]);
                }
                for (std::size_t j = 0; j < biases_[l].size(); ++j) {
                    biases_[l][j] -= cfg.lr * gb[l][j];
                }
            }
        }
    }
}

FfnnModel train_life_table(const BaselineInputs& data, const BaselineConfig& cfg) {
    if (data.features.cols() != 2) {
        throw ValidationError("life table expects exactly (age, sex) covariates");
    }
    FfnnModel model(2, {}, cfg.seed);
    model.train(data, cfg);
    return model;
}

FfnnModel train_logreg(const BaselineInputs& data, const BaselineConfig& cfg) {
    FfnnModel model(data.features.cols(), {}, cfg.seed);
    model.train(data, cfg);
    return model;
}

FfnnModel train_ffnn(const BaselineInputs& data, const BaselineConfig& cfg) {
    FfnnModel model(data.features.cols(), cfg.hidden, cfg.seed);
    model.train(data, cfg);
    return model;
}

Vec baseline_scores(const FfnnModel& model, const Mat& features) {
    Vec out(static_cast<std::size_t>(features.rows()), 0.0);
    for (int i = 0; i < features.rows(); ++i) out[i] = model.score(features.row(i));
    return out;
}

}  // namespace lifeseq
