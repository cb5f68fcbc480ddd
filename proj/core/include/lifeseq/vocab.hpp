#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lifeseq/common.hpp"
#include "lifeseq/synthgen.hpp"

namespace lifeseq {

// Special tokens occupy the reserved ids 0..4.
enum SpecialToken : int {
    kPad = 0,
    kCls = 1,
    kSep = 2,
    kUnk = 3,
    kMask = 4,
};
inline constexpr int kNumSpecial = 5;

// Token strings for one event / one background sentence.
std::vector<std::string> event_tokens(const EventRecord& ev);
std::vector<std::string> background_tokens(const PersonRecord& p);

class Vocabulary {
public:
    Vocabulary() = default;

    // Deterministic id assignment: specials first, then corpus tokens sorted
    // by descending frequency with lexicographic tie break. Tokens under
    // min_frequency are excluded and encode as [UNK].
    static Vocabulary build(const std::vector<PersonRecord>& corpus, long min_frequency);

    int size() const { return static_cast<int>(id_to_token_.size()); }
    long min_frequency() const { return min_frequency_; }

    int id_of(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? kUnk : it->second;
    }
    bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }
    const std::string& token_of(int id) const { return id_to_token_.at(id); }
    long frequency_of(int id) const { return frequencies_.at(id); }

    bool is_special(int id) const { return id < kNumSpecial; }

    // Fingerprint over the id->token mapping; stored in dataset/checkpoint
    // headers so artifacts can refuse incompatible inputs.
    std::uint64_t hash() const;

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    const std::vector<std::string>& tokens() const { return id_to_token_; }

private:
    std::vector<std::string> id_to_token_;
    std::vector<long> frequencies_;
    std::unordered_map<std::string, int> token_to_id_;
    long min_frequency_ = 0;

    void index();
};

}  // namespace lifeseq
