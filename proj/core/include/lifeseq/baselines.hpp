#pragma once

#include <vector>

#include "lifeseq/common.hpp"
#include "lifeseq/matrix.hpp"
#include "lifeseq/synthgen.hpp"
#include "lifeseq/tokenizer.hpp"

namespace lifeseq {

// Feature rows for the comparison models. Life tables see only (age, sex);
// the count models see token counts over the final year of the window.
struct BaselineInputs {
    Mat features;                      // n x dim
    std::vector<std::uint8_t> labels;  // 1 = positive
};

// Standardized age + sex indicator.
BaselineInputs life_table_inputs(const std::vector<PersonRecord>& people,
                                 const std::vector<std::uint8_t>& labels, const Date& end_date);

// Token-count vectors restricted to events within the year before end_date
// (background sentence included).
BaselineInputs count_vector_inputs(const std::vector<PersonRecord>& people,
                                   const std::vector<std::uint8_t>& labels, const Vocabulary& vocab,
                                   const TokenizerConfig& tok_cfg, const Date& end_date);

struct BaselineConfig {
    int epochs = 40;
    int batch_size = 64;
    int epoch_size = 2000;
    real lr = 0.05;
    real ridge = 1e-4;  // l2 penalty on weights
    real asymmetric_c = 0.5;
    std::vector<int> hidden;  // empty = logistic regression architecture
    std::uint64_t seed = 0;
};

// Feed-forward PU classifier: swish hidden layers, scalar output logit z;
// the PU loss sees 2-class logits [0, z]. With no hidden layers this is
// exactly the ridge logistic regression.
class FfnnModel {
public:
    FfnnModel() = default;
    FfnnModel(int input_dim, const std::vector<int>& hidden, std::uint64_t seed);

    real score_logit(const real* x) const;  // z
    real score(const real* x) const;        // P(positive)
    long parameter_count() const;

    // Asymmetric-CE SGD with ridge penalty; batches are drawn through the
    // shared PU sampler so every model sees the identical stream.
    void train(const BaselineInputs& data, const BaselineConfig& cfg);

    const std::vector<Mat>& weights() const { return weights_; }

private:
    std::vector<Mat> weights_;  // layer l: in x out
    std::vector<Vec> biases_;
    std::vector<int> dims_;

    struct Acts;
    real forward(const real* x, Acts* acts) const;
    void backward(const Acts& acts, real dz, std::vector<Mat>& gw, std::vector<Vec>& gb) const;
};

FfnnModel train_life_table(const BaselineInputs& data, const BaselineConfig& cfg);
FfnnModel train_logreg(const BaselineInputs& data, const BaselineConfig& cfg);
FfnnModel train_ffnn(const BaselineInputs& data, const BaselineConfig& cfg);

Vec baseline_scores(const FfnnModel& model, const Mat& features);

}  // namespace lifeseq
