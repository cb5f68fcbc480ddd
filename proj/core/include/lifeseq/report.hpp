#pragma once

#include <map>
#include <string>

#include "lifeseq/config.hpp"
#include "lifeseq/metrics.hpp"
#include "lifeseq/synthgen.hpp"
#include "lifeseq/tokenizer.hpp"

namespace lifeseq {

struct MetricWithCi {
    std::string name;
    real point = 0.0;
    real ci_low = 0.0;
    real ci_high = 0.0;
    real median = 0.0;
};

struct SubgroupReport {
    std::string key;    // e.g. "age_band"
    std::string value;  // e.g. "40-49"
    long n = 0;
    std::vector<MetricWithCi> metrics;
};

struct EvalReport {
    std::string task;
    std::string model_name;
    long n = 0;
    std::vector<MetricWithCi> metrics;
    std::vector<SubgroupReport> subgroups;
};

// Per-sample subgroup labels (age band, sex, sequence-length band,
// health-event-count band).
struct SubgroupLabels {
    std::vector<std::string> age_band;
    std::vector<std::string> sex;
    std::vector<std::string> length_band;
    std::vector<std::string> health_band;
};

SubgroupLabels subgroup_labels(const std::vector<PersonRecord>& people,
                               const std::vector<EncodedSequence>& sequences, const Date& end_date);

EvalReport evaluate_mortality_predictions(const PuPredictions& preds, const MetricsConfig& cfg,
                                          const SubgroupLabels* groups, std::uint64_t seed,
                                          const std::string& model_name = "lifeseq");

EvalReport evaluate_personality_predictions(const std::vector<std::array<int, 4>>& truth,
                                            const std::vector<std::array<int, 4>>& predicted,
                                            const MetricsConfig& cfg, std::uint64_t seed,
                                            const std::string& model_name = "lifeseq");

// {metric, point, ci_low, ci_high, n, subgroups: [...]} plus a CSV mirror.
std::string report_to_json(const EvalReport& report);
void write_report_json(const std::string& path, const EvalReport& report);
void write_report_csv(const std::string& path, const EvalReport& report);

// Run manifest: resolved config, seed, and artifact hashes for exact replay.
void write_manifest(const std::string& path, const std::string& resolved_config_json,
                    std::uint64_t seed, const std::map<std::string, std::string>& artifacts);

std::uint64_t hash_file(const std::string& path);

}  // namespace lifeseq
