#include "lifeseq/report.hpp"

#include <fstream>

#include <json.hpp>

#include "lifeseq/rng.hpp"

namespace lifeseq {

using json = nlohmann::ordered_json;

SubgroupLabels subgroup_labels(const std::vector<PersonRecord>& people,
                               const std::vector<EncodedSequence>& sequences,
                               const Date& end_date) {
    SubgroupLabels g;
    const std::size_t n = people.size();
    g.age_band.resize(n);
    g.sex.resize(n);
    g.length_band.resize(n);
    g.health_band.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int age = completed_years(people[i].birth_year, people[i].birth_month, end_date);
        g.age_band[i] = age < 40 ? "30-39" : (age < 50 ? "40-49" : "50+");
        g.sex[i] = people[i].sex == 1 ? "male" : "female";
        const int len = sequences[i].length();
        g.length_band[i] = len < 64 ? "short" : (len < 160 ? "medium" : "long");
        int health = 0;
        for (const auto& ev : people[i].events) health += ev.kind == EventKind::health ? 1 : 0;
        g.health_band[i] = health == 0 ? "0" : (health <= 3 ? "1-3" : "4+");
    }
    return g;
}

namespace {

MetricWithCi with_ci(const std::string& name, real point, const PuPredictions& preds,
                     const std::function<real(const PuPredictions&)>& metric,
                     const MetricsConfig& cfg, std::uint64_t seed) {
    MetricWithCi m;
    m.name = name;
    m.point = point;
    const BootstrapCi ci =
        bootstrap_ci(preds, metric, cfg.bootstrap_resamples, cfg.level, true, seed);
    m.ci_low = ci.low;
    m.ci_high = ci.high;
    m.median = ci.median;
    return m;
}

std::vector<MetricWithCi> mortality_metrics(const PuPredictions& preds, const MetricsConfig& cfg,
                                            std::uint64_t seed) {
    const auto prev = cfg.positive_prevalence;
    const real threshold = cfg.threshold;
    std::vector<MetricWithCi> out;
    out.push_back(with_ci(
        "cmcc", cmcc(preds, threshold, prev), preds,
        [threshold, prev](const PuPredictions& p) { return cmcc(p, threshold, prev); }, cfg,
        derive_seed(seed, "cmcc")));
    out.push_back(with_ci(
        "aul", aul(preds), preds, [](const PuPredictions& p) { return aul(p); }, cfg,
        derive_seed(seed, "aul")));
    const CorrectedRates rates = corrected_accuracy_f1(preds, threshold, prev);
    out.push_back(with_ci(
        "balanced_accuracy", rates.balanced_accuracy, preds,
        [threshold, prev](const PuPredictions& p) {
            return corrected_accuracy_f1(p, threshold, prev).balanced_accuracy;
        },
        cfg, derive_seed(seed, "bacc")));
    out.push_back(with_ci(
        "f1", rates.f1, preds,
        [threshold, prev](const PuPredictions& p) {
            return corrected_accuracy_f1(p, threshold, prev).f1;
        },
        cfg, derive_seed(seed, "f1")));
    return out;
}

}  // namespace

EvalReport evaluate_mortality_predictions(const PuPredictions& preds, const MetricsConfig& cfg,
                                          const SubgroupLabels* groups, std::uint64_t seed,
                                          const std::string& model_name) {
    EvalReport report;
    report.task = "mortality";
    report.model_name = model_name;
    report.n = static_cast<long>(preds.scores.size());
    report.metrics = mortality_metrics(preds, cfg, seed);

    if (groups) {
        const std::vector<std::pair<std::string, const std::vector<std::string>*>> keys = {
            {"age_band", &groups->age_band},
            {"sex", &groups->sex},
            {"length_band", &groups->length_band},
            {"health_events", &groups->health_band},
        };
        for (const auto& [key, labels] : keys) {
            std::map<std::string, std::vector<std::size_t>> buckets;
            for (std::size_t i = 0; i < labels->size(); ++i) buckets[(*labels)[i]].push_back(i);
            for (const auto& [value, idx] : buckets) {
                PuPredictions sub;
                for (std::size_t i : idx) {
                    sub.scores.push_back(preds.scores[i]);
                    sub.labels.push_back(preds.labels[i]);
                }
                long pos = 0;
                for (auto l : sub.labels) pos += l;
                if (pos == 0 || pos == static_cast<long>(sub.labels.size())) continue;
                SubgroupReport sg;
                sg.key = key;
                sg.value = value;
                sg.n = static_cast<long>(sub.scores.size());
                sg.metrics = mortality_metrics(sub, cfg, derive_seed(seed, key + "/" + value));
                report.subgroups.push_back(std::move(sg));
            }
        }
    }
    return report;
}

EvalReport evaluate_personality_predictions(const std::vector<std::array<int, 4>>& truth,
                                            const std::vector<std::array<int, 4>>& predicted,
                                            const MetricsConfig& cfg, std::uint64_t seed,
                                            const std::string& model_name) {
    if (truth.size() != predicted.size() || truth.empty()) {
        throw ValidationError("evaluate_personality_predictions: aligned nonempty vectors required");
    }
    EvalReport report;
    report.task = "personality";
    report.model_name = model_name;
    report.n = static_cast<long>(truth.size());

    const std::size_t n = truth.size();
    real mean_kappa = 0.0;
    for (int item = 0; item < 4; ++item) {
        std::vector<int> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = truth[i][item];
            p[i] = predicted[i][item];
        }
        const real point = cqk(t, p, 5);
        mean_kappa += point / 4.0;

        // Index bootstrap for the CQK interval.
        Vec values;
        values.reserve(cfg.bootstrap_resamples);
        for (int r = 0; r < cfg.bootstrap_resamples; ++r) {
            Rng rng(derive_seed(derive_seed(seed, "cqk", static_cast<std::uint64_t>(item)),
                                static_cast<std::uint64_t>(r)));
            std::vector<int> tb(n), pb(n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t k = rng.below(n);
                tb[i] = t[k];
                pb[i] = p[k];
            }
            values.push_back(cqk(tb, pb, 5));
        }
        MetricWithCi m;
        m.name = "cqk_item" + std::to_string(item + 1);
        m.point = point;
        const real tail = (1.0 - cfg.level) / 2.0;
        m.ci_low = quantile(values, tail);
        m.ci_high = quantile(values, 1.0 - tail);
        m.median = quantile(values, 0.5);
        report.metrics.push_back(std::move(m));
    }
    MetricWithCi mk;
    mk.name = "cqk_mean";
    mk.point = mean_kappa;
    mk.ci_low = mk.ci_high = mk.median = mean_kappa;
    report.metrics.push_back(std::move(mk));
    return report;
}

namespace {

json metric_json(const MetricWithCi& m, long n) {
    json j;
    j["metric"] = m.name;
    j["point"] = m.point;
    j["ci_low"] = m.ci_low;
    j["ci_high"] = m.ci_high;
    j["median"] = m.median;
    j["n"] = n;
    return j;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    json j;
    j["task"] = report.task;
    j["model"] = report.model_name;
    j["n"] = report.n;
    json metrics = json::array();
    for (const auto& m : report.metrics) metrics.push_back(metric_json(m, report.n));
    j["metrics"] = std::move(metrics);
    json subgroups = json::array();
    for (const auto& sg : report.subgroups) {
        json s;
        s["key"] = sg.key;
        s["value"] = sg.value;
        s["n"] = sg.n;
        json ms = json::array();
        for (const auto& m : sg.metrics) ms.push_back(metric_json(m, sg.n));
        s["metrics"] = std::move(ms);
        subgroups.push_back(std::move(s));
    }
    j["subgroups"] = std::move(subgroups);
    return j.dump(2);
}

void write_report_json(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << report_to_json(report) << '\n';
}

void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "scope,key,value,metric,point,ci_low,ci_high,median,n\n";
    char buf[256];
    for (const auto& m : report.metrics) {
        std::snprintf(buf, sizeof(buf), "global,,,%s,%.9g,%.9g,%.9g,%.9g,%ld\n", m.name.c_str(),
                      m.point, m.ci_low, m.ci_high, m.median, report.n);
        out << buf;
    }
    for (const auto& sg : report.subgroups) {
        for (const auto& m : sg.metrics) {
            std::snprintf(buf, sizeof(buf), "subgroup,%s,%s,%s,%.9g,%.9g,%.9g,%.9g,%ld\n",
                          sg.key.c_str(), sg.value.c_str(), m.name.c_str(), m.point, m.ci_low,
                          m.ci_high, m.median, sg.n);
            out << buf;
        }
    }
}

std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for hashing");
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
        if (!in) break;
    }
    return h;
}

void write_manifest(const std::string& path, const std::string& resolved_config_json,
                    std::uint64_t seed, const std::map<std::string, std::string>& artifacts) {
    json j;
    j["schema_version"] = 1;
    j["seed"] = seed;
    j["config"] = json::parse(resolved_config_json);
    json arts = json::object();
    for (const auto& [name, file] : artifacts) {
        json a;
        a["path"] = file;
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(hash_file(file)));
        a["fnv1a64"] = hex;
        arts[name] = std::move(a);
    }
    j["artifacts"] = std::move(arts);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

}  // namespace lifeseq
