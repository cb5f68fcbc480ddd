#include "lifeseq/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

namespace lifeseq {

std::vector<std::string> event_tokens(const EventRecord& ev) {
    std::vector<std::string> out;
    out.reserve(ev.attributes.size());
    for (const auto& [name, value] : ev.attributes) {
        out.push_back(name + "_" + std::to_string(value));
    }
    return out;
}

std::vector<std::string> background_tokens(const PersonRecord& p) {
    return {
        p.sex == 1 ? "SEX_M" : "SEX_F",
        p.origin == 1 ? "ORIGIN_F" : "ORIGIN_N",
        "BYEAR_" + std::to_string(p.birth_year),
        "BMONTH_" + std::to_string(p.birth_month),
    };
}

Vocabulary Vocabulary::build(const std::vector<PersonRecord>& corpus, long min_frequency) {
    if (corpus.empty()) throw ValidationError("build_vocabulary: corpus is empty");
    std::map<std::string, long> counts;  // ordered map: stable iteration
    for (const auto& p : corpus) {
        for (const auto& t : background_tokens(p)) ++counts[t];
        for (const auto& ev : p.events) {
            for (const auto& t : event_tokens(ev)) ++counts[t];
        }
    }
    std::vector<std::pair<std::string, long>> kept;
    kept.reserve(counts.size());
    for (const auto& [token, freq] : counts) {
        if (freq >= min_frequency) kept.emplace_back(token, freq);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    v.min_frequency_ = min_frequency;
    v.id_to_token_ = {"[PAD]", "[CLS]", "[SEP]", "[UNK]", "[MASK]"};
    v.frequencies_.assign(kNumSpecial, 0);
    for (auto& [token, freq] : kept) {
        v.id_to_token_.push_back(std::move(token));
        v.frequencies_.push_back(freq);
    }
    v.index();
    return v;
}

void Vocabulary::index() {
    token_to_id_.clear();
    token_to_id_.reserve(id_to_token_.size());
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
        token_to_id_[id_to_token_[i]] = static_cast<int>(i);
    }
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const char sep = '\x1f';  // separator so concatenations cannot collide
    for (const auto& t : id_to_token_) {
        h = fnv1a64(t.data(), t.size(), h);
        h = fnv1a64(&sep, 1, h);
    }
    return h;
}

void Vocabulary::save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["min_frequency"] = min_frequency_;
    j["tokens"] = id_to_token_;
    j["frequencies"] = frequencies_;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("bad vocabulary file '" + path + "': " + e.what());
    }
    Vocabulary v;
    v.min_frequency_ = j.at("min_frequency").get<long>();
    v.id_to_token_ = j.at("tokens").get<std::vector<std::string>>();
    v.frequencies_ = j.at("frequencies").get<std::vector<long>>();
    if (v.id_to_token_.size() < kNumSpecial || v.id_to_token_[kPad] != "[PAD]") {
        throw IoError("vocabulary file '" + path + "' is missing the reserved special tokens");
    }
    v.index();
    return v;
}

}  // namespace lifeseq
