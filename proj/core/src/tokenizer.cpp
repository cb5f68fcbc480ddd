#include "lifeseq/tokenizer.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace lifeseq {

int absolute_position(const Date& origin, const Date& at) {
    return static_cast<int>(days_from_civil(at) - days_from_civil(origin)) + 1;
}

namespace {

struct Sentence {
    std::vector<int> ids;
    TemporalStamp stamp;
};

void append_sentence(EncodedSequence& seq, int& pos, const Sentence& s) {
    for (std::size_t i = 0; i <= s.ids.size(); ++i) {
        const bool sep = i == s.ids.size();
        seq.token_ids[pos] = sep ? kSep : s.ids[i];
        seq.abs_position[pos] = s.stamp.abs_position;
        seq.age[pos] = s.stamp.age;
        seq.segment[pos] = s.stamp.segment;
        seq.padding_mask[pos] = 1;
        ++pos;
    }
}

}  // namespace

EncodedSequence encode_person(const PersonRecord& record, const Vocabulary& vocab,
                              const TokenizerConfig& cfg) {
    const Sentence background{
        [&] {
            std::vector<int> ids;
            for (const auto& t : background_tokens(record)) ids.push_back(vocab.id_of(t));
            return ids;
        }(),
        TemporalStamp{kNoStamp, kNoStamp, 0},
    };

    std::vector<Sentence> events;
    events.reserve(record.events.size());
    for (std::size_t i = 0; i < record.events.size(); ++i) {
        const EventRecord& ev = record.events[i];
        if (ev.date < cfg.origin_date) {
            throw ValidationError("encode_person: event on " + format_date(ev.date) +
                                  " predates origin " + format_date(cfg.origin_date));
        }
        Sentence s;
        for (const auto& t : event_tokens(ev)) s.ids.push_back(vocab.id_of(t));
        s.stamp.abs_position = absolute_position(cfg.origin_date, ev.date);
        s.stamp.age = completed_years(record.birth_year, record.birth_month, ev.date);
        s.stamp.segment = static_cast<int>(i % 3);
        events.push_back(std::move(s));
    }

    // [CLS] background [SEP] comes first and always survives truncation.
    const int head = 1 + static_cast<int>(background.ids.size()) + 1;
    if (head > cfg.max_len) {
        throw ValidationError("encode_person: max_len " + std::to_string(cfg.max_len) +
                              " cannot hold the background sentence");
    }
    // Drop earliest events wholesale until the rest fits: the kept events are
    // the maximal suffix whose tokens plus separators fit after the head.
    int budget = cfg.max_len - head;
    std::size_t first_kept = events.size();
    while (first_kept > 0) {
        const int cost = static_cast<int>(events[first_kept - 1].ids.size()) + 1;
        if (cost > budget) break;
        budget -= cost;
        --first_kept;
    }

    EncodedSequence seq;
    seq.person_id = record.person_id;
    seq.max_len = cfg.max_len;
    seq.token_ids.assign(cfg.max_len, kPad);
    seq.abs_position.assign(cfg.max_len, kNoStamp);
    seq.age.assign(cfg.max_len, kNoStamp);
    seq.segment.assign(cfg.max_len, 0);
    seq.padding_mask.assign(cfg.max_len, 0);

    int pos = 0;
    seq.token_ids[pos] = kCls;  // [CLS] shares the background stamp
    seq.segment[pos] = background.stamp.segment;
    seq.padding_mask[pos] = 1;
    ++pos;
    append_sentence(seq, pos, background);
    for (std::size_t i = first_kept; i < events.size(); ++i) append_sentence(seq, pos, events[i]);
    return seq;
}

std::vector<std::pair<int, int>> event_spans(const EncodedSequence& seq) {
    std::vector<std::pair<int, int>> spans;
    // Skip [CLS] + background: the first [SEP] closes the background sentence.
    int pos = 0;
    const int n = seq.max_len;
    while (pos < n && seq.padding_mask[pos] && seq.token_ids[pos] != kSep) ++pos;
    ++pos;  // past the background [SEP]
    int begin = pos;
    for (; pos < n && seq.padding_mask[pos]; ++pos) {
        if (seq.token_ids[pos] == kSep) {
            spans.emplace_back(begin, pos);
            begin = pos + 1;
        }
    }
    return spans;
}

std::vector<long> count_vector(const EncodedSequence& seq, const Vocabulary& vocab) {
    std::vector<long> counts(vocab.size(), 0);
    for (int i = 0; i < seq.max_len; ++i) {
        if (seq.padding_mask[i] && seq.token_ids[i] != kPad) ++counts[seq.token_ids[i]];
    }
    return counts;
}

namespace {
constexpr char kDatasetMagic[4] = {'L', 'S', 'Q', 'D'};
constexpr std::uint32_t kDatasetVersion = 1;

template <class T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated dataset file '" + path + "'");
    return v;
}
}  // namespace

void write_encoded_dataset(const std::string& path, const std::vector<EncodedSequence>& seqs,
                           const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kDatasetMagic, 4);
    put(out, kDatasetVersion);
    put(out, static_cast<std::uint32_t>(seqs.empty() ? 0 : seqs.front().max_len));
    put(out, vocab.hash());
    put(out, static_cast<std::uint64_t>(seqs.size()));
    for (const auto& s : seqs) {
        put(out, s.person_id);
        const std::uint32_t n = static_cast<std::uint32_t>(s.length());
        put(out, n);
        for (std::uint32_t i = 0; i < n; ++i) put(out, static_cast<std::int32_t>(s.token_ids[i]));
        for (std::uint32_t i = 0; i < n; ++i) put(out, static_cast<std::int32_t>(s.abs_position[i]));
        for (std::uint32_t i = 0; i < n; ++i) put(out, static_cast<std::int32_t>(s.age[i]));
        for (std::uint32_t i = 0; i < n; ++i) put(out, static_cast<std::int32_t>(s.segment[i]));
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

std::vector<EncodedSequence> read_encoded_dataset(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kDatasetMagic, 4) != 0) {
        throw IoError("'" + path + "' is not an encoded dataset file");
    }
    const auto version = get<std::uint32_t>(in, path);
    if (version != kDatasetVersion) {
        throw IoError("dataset '" + path + "' has schema version " + std::to_string(version) +
                      ", expected " + std::to_string(kDatasetVersion));
    }
    const auto max_len = get<std::uint32_t>(in, path);
    const auto vhash = get<std::uint64_t>(in, path);
    if (vhash != vocab.hash()) {
        throw IoError("dataset '" + path + "' was encoded with a different vocabulary (hash mismatch)");
    }
    const auto count = get<std::uint64_t>(in, path);
    std::vector<EncodedSequence> seqs;
    seqs.reserve(count);
    for (std::uint64_t r = 0; r < count; ++r) {
        EncodedSequence s;
        s.person_id = get<std::int64_t>(in, path);
        s.max_len = static_cast<int>(max_len);
        const auto n = get<std::uint32_t>(in, path);
        if (n > max_len) throw IoError("corrupt record in '" + path + "'");
        s.token_ids.assign(max_len, kPad);
        s.abs_position.assign(max_len, kNoStamp);
        s.age.assign(max_len, kNoStamp);
        s.segment.assign(max_len, 0);
        s.padding_mask.assign(max_len, 0);
        for (std::uint32_t i = 0; i < n; ++i) s.token_ids[i] = get<std::int32_t>(in, path);
        for (std::uint32_t i = 0; i < n; ++i) s.abs_position[i] = get<std::int32_t>(in, path);
        for (std::uint32_t i = 0; i < n; ++i) s.age[i] = get<std::int32_t>(in, path);
        for (std::uint32_t i = 0; i < n; ++i) s.segment[i] = get<std::int32_t>(in, path);
        for (std::uint32_t i = 0; i < n; ++i) s.padding_mask[i] = 1;
        seqs.push_back(std::move(s));
    }
    return seqs;
}

}  // namespace lifeseq
