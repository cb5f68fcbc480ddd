#pragma once

#include <string>
#include <vector>

#include "lifeseq/date.hpp"
#include "lifeseq/vocab.hpp"

namespace lifeseq {

// Sentinel for "no temporal information" (background sentence, [CLS]); the
// embedder maps it to a zero temporal contribution.
inline constexpr int kNoStamp = -1;

struct TemporalStamp {
    int abs_position = kNoStamp;  // days, origin date = day one
    int age = kNoStamp;           // completed years
    int segment = 0;              // 0,1,2 cycling across consecutive events
};

struct EncodedSequence {
    std::int64_t person_id = 0;
    int max_len = 0;
    std::vector<int> token_ids;     // length max_len, [PAD]-filled tail
    std::vector<int> abs_position;  // aligned with token_ids
    std::vector<int> age;
    std::vector<int> segment;
    std::vector<std::uint8_t> padding_mask;  // 1 = real token

    int length() const {
        int n = 0;
        for (auto m : padding_mask) n += m;
        return n;
    }
};

struct TokenizerConfig {
    int max_len = 256;
    Date origin_date{2008, 1, 1};
};

// Days since the origin with the origin itself counted as day one.
int absolute_position(const Date& origin, const Date& at);

EncodedSequence encode_person(const PersonRecord& record, const Vocabulary& vocab,
                              const TokenizerConfig& cfg);

// Token positions of each event sentence (trailing [SEP] excluded), derived
// from the [SEP] layout. The background sentence is not an event.
std::vector<std::pair<int, int>> event_spans(const EncodedSequence& seq);

// Token counts over the sequence; [PAD] excluded, everything else counted.
std::vector<long> count_vector(const EncodedSequence& seq, const Vocabulary& vocab);

// Binary record file with a header that pins (schema, max_len, vocab hash).
void write_encoded_dataset(const std::string& path, const std::vector<EncodedSequence>& seqs,
                           const Vocabulary& vocab);
std::vector<EncodedSequence> read_encoded_dataset(const std::string& path, const Vocabulary& vocab);

}  // namespace lifeseq
