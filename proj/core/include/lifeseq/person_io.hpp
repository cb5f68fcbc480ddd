#pragma once

#include <string>
#include <vector>

#include "lifeseq/synthgen.hpp"

namespace lifeseq {

inline constexpr int kPersonSchemaVersion = 1;

// JSON-lines dataset: one person per line, outcome fields inline. The
// "truth" object is generator-internal ground truth; pipeline code never
// feeds it to a model.
void write_people_jsonl(const std::string& path, const std::vector<PersonRecord>& people,
                        const std::vector<OutcomeRecord>& outcomes);

struct Dataset {
    std::vector<PersonRecord> people;
    std::vector<OutcomeRecord> outcomes;
};

Dataset read_people_jsonl(const std::string& path);

}  // namespace lifeseq
