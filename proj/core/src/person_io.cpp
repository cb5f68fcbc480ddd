#include "lifeseq/person_io.hpp"

#include <fstream>

#include <json.hpp>

namespace lifeseq {

using json = nlohmann::ordered_json;

namespace {

const char* outcome_name(TrueOutcome o) {
    switch (o) {
        case TrueOutcome::died: return "died";
        case TrueOutcome::survived: return "survived";
        case TrueOutcome::censored: return "censored";
    }
    return "survived";
}

TrueOutcome outcome_from(const std::string& s) {
    if (s == "died") return TrueOutcome::died;
    if (s == "survived") return TrueOutcome::survived;
    if (s == "censored") return TrueOutcome::censored;
    throw IoError("unknown true_outcome '" + s + "'");
}

}  // namespace

void write_people_jsonl(const std::string& path, const std::vector<PersonRecord>& people,
                        const std::vector<OutcomeRecord>& outcomes) {
    if (!outcomes.empty() && outcomes.size() != people.size()) {
        throw ValidationError("write_people_jsonl: outcomes/people size mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < people.size(); ++i) {
        const PersonRecord& p = people[i];
        json j;
        j["schema_version"] = kPersonSchemaVersion;
        j["person_id"] = p.person_id;
        j["sex"] = p.sex;
        j["origin"] = p.origin;
        j["birth_year"] = p.birth_year;
        j["birth_month"] = p.birth_month;
        json evs = json::array();
        for (const auto& ev : p.events) {
            json e;
            e["date"] = format_date(ev.date);
            e["kind"] = ev.kind == EventKind::labor ? "labor" : "health";
            json attrs = json::object();
            for (const auto& [name, value] : ev.attributes) attrs[name] = value;
            e["attributes"] = attrs;
            evs.push_back(std::move(e));
        }
        j["events"] = std::move(evs);
        if (!outcomes.empty()) {
            const OutcomeRecord& o = outcomes[i];
            j["mortality_label"] = o.positive_label ? "positive" : "unlabeled";
            j["item_responses"] = o.item_responses;
            j["truth"] = json{{"true_outcome", outcome_name(o.true_outcome)}};
        }
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

Dataset read_people_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw IoError(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
        }
        PersonRecord p;
        p.person_id = j.at("person_id").get<std::int64_t>();
        p.sex = j.at("sex").get<int>();
        p.origin = j.at("origin").get<int>();
        p.birth_year = j.at("birth_year").get<int>();
        p.birth_month = j.at("birth_month").get<int>();
        for (const auto& e : j.at("events")) {
            EventRecord ev;
            ev.date = parse_date(e.at("date").get<std::string>());
            ev.kind = e.at("kind").get<std::string>() == "labor" ? EventKind::labor : EventKind::health;
            for (const auto& [name, value] : e.at("attributes").items()) {
                ev.attributes.emplace_back(name, value.get<int>());
            }
            // JSON objects do not preserve insertion order across parse; keep
            // attribute order canonical so re-encoding is stable.
            std::sort(ev.attributes.begin(), ev.attributes.end());
            p.events.push_back(std::move(ev));
        }
        OutcomeRecord o;
        o.person_id = p.person_id;
        if (j.contains("mortality_label")) {
            o.positive_label = j.at("mortality_label").get<std::string>() == "positive";
            const auto& items = j.at("item_responses");
            for (int k = 0; k < 4; ++k) o.item_responses[k] = items.at(k).get<int>();
            o.true_outcome = outcome_from(j.at("truth").at("true_outcome").get<std::string>());
        }
        ds.people.push_back(std::move(p));
        ds.outcomes.push_back(o);
    }
    return ds;
}

}  // namespace lifeseq
