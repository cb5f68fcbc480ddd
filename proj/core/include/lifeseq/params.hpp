#pragma once

#include <deque>
#include <string>
#include <vector>

#include "lifeseq/matrix.hpp"

namespace lifeseq {

// One named parameter tensor with its gradient accumulator.
// lr_group drives layer-wise learning rates during finetuning:
//   0            -> task decoder
//   1..n_layers  -> encoder blocks counted from the top (1 = closest to the decoder)
//   n_layers + 1 -> embedding block
struct Param {
    std::string name;
    Mat value;
    Mat grad;
    int lr_group = 0;
    bool frozen = false;

    real scalar() const { return value(0, 0); }
};

// Owns every trainable tensor; deque keeps addresses stable.
class ParamStore {
public:
    Param& add(const std::string& name, int rows, int cols, int lr_group = 0) {
        params_.push_back(Param{name, Mat(rows, cols), Mat(rows, cols), lr_group, false});
        return params_.back();
    }

    void zero_grads() {
        for (auto& p : params_) p.grad.zero();
    }

    std::vector<Param*> all() {
        std::vector<Param*> out;
        out.reserve(params_.size());
        for (auto& p : params_) out.push_back(&p);
        return out;
    }

    Param* find(const std::string& name) {
        for (auto& p : params_) {
            if (p.name == name) return &p;
        }
        return nullptr;
    }

    std::size_t count() const { return params_.size(); }

private:
    std::deque<Param> params_;
};

}  // namespace lifeseq
