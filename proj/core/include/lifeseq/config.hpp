#pragma once

#include <array>
#include <optional>
#include <string>

#include "lifeseq/finetune.hpp"
#include "lifeseq/model.hpp"
#include "lifeseq/pretrain.hpp"
#include "lifeseq/synthgen.hpp"
#include "lifeseq/tokenizer.hpp"

namespace lifeseq {

struct MetricsConfig {
    int bootstrap_resamples = 1000;
    real level = 0.95;
    real threshold = 0.5;
    std::optional<real> positive_prevalence;  // enables the PU correction when known
};

enum class Task { mortality, personality };

// The versioned experiment document. Every field has a default; unknown keys
// anywhere in the tree are rejected.
struct RunConfig {
    int schema_version = 1;
    std::uint64_t seed = 0;
    GeneratorConfig generator;
    TokenizerConfig tokenizer;
    long min_frequency = 1;
    std::array<real, 3> split_ratios{0.7, 0.15, 0.15};
    ModelConfig model;
    PretrainConfig pretrain;
    FinetuneConfig finetune;
    Task task = Task::mortality;
    MetricsConfig metrics;

    // Seeds for the sub-modules all derive from the single run seed.
    void propagate_seed();
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);  // resolved, for manifests

}  // namespace lifeseq
