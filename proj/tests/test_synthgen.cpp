#include <doctest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "lifeseq/person_io.hpp"
#include "lifeseq/synthgen.hpp"

using namespace lifeseq;

namespace {

std::string serialize(const std::vector<PersonRecord>& people,
                      const std::vector<OutcomeRecord>& outcomes) {
    const std::string path = "/tmp/lifeseq_synthgen_test.jsonl";
    write_people_jsonl(path, people, outcomes);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("generation is bit-deterministic under (config, seed)") {
    const GeneratorConfig cfg = test::tiny_generator(10, 7);
    const auto p1 = generate_population(cfg);
    const auto p2 = generate_population(cfg);
    const auto o1 = assign_outcomes(p1, cfg);
    const auto o2 = assign_outcomes(p2, cfg);
    CHECK(serialize(p1, o1) == serialize(p2, o2));

    GeneratorConfig other = cfg;
    other.seed = 8;
    const auto p3 = generate_population(other);
    CHECK(serialize(p1, o1) != serialize(p3, assign_outcomes(p3, other)));
}

TEST_CASE("zero event rate produces background-only persons") {
    GeneratorConfig cfg = test::tiny_generator(25, 3);
    cfg.events_per_person = {0.0, 0.0};
    for (const auto& p : generate_population(cfg)) CHECK(p.events.empty());
}

TEST_CASE("events are chronological and after birth") {
    const GeneratorConfig cfg = test::tiny_generator(50, 11);
    for (const auto& p : generate_population(cfg)) {
        const Date birth{p.birth_year, p.birth_month, 1};
        long prev = days_from_civil(cfg.start_date);
        for (const auto& ev : p.events) {
            const long s = days_from_civil(ev.date);
            CHECK(s >= prev);
            CHECK(days_from_civil(birth) < s);
            prev = s;
            if (ev.kind == EventKind::labor) {
                CHECK(ev.attributes.size() >= 3);
                CHECK(ev.attributes.size() <= 7);
            } else {
                CHECK(ev.attributes.size() >= 2);
                CHECK(ev.attributes.size() <= 3);
            }
        }
    }
}

TEST_CASE("invalid configs name the offending field") {
    GeneratorConfig cfg = test::tiny_generator(10, 1);
    cfg.censoring_rate = 0.7;
    CHECK_THROWS_WITH_AS(generate_population(cfg), doctest::Contains("censoring_rate"),
                         ValidationError);
    cfg = test::tiny_generator(10, 1);
    cfg.n_income_levels = 1;
    CHECK_THROWS_WITH_AS(generate_population(cfg), doctest::Contains("n_income_levels"),
                         ValidationError);
    cfg = test::tiny_generator(10, 1);
    cfg.end_date = cfg.start_date;
    CHECK_THROWS_WITH_AS(generate_population(cfg), doctest::Contains("end_date"), ValidationError);
}

// Corpus-count oracle: within-person adjacent-income transitions must beat the
// unconditional adjacent frequency.
TEST_CASE("income walk plants adjacent-level transitions") {
    GeneratorConfig cfg = test::tiny_generator(2000, 1);
    cfg.events_per_person = {20.0, 0.2};
    const auto people = generate_population(cfg);

    long adjacent = 0, transitions = 0;
    std::map<int, long> level_counts;
    long total_levels = 0;
    for (const auto& p : people) {
        int prev = -1;
        for (const auto& ev : p.events) {
            for (const auto& [name, value] : ev.attributes) {
                if (name != "INC") continue;
                ++level_counts[value];
                ++total_levels;
                if (prev >= 0) {
                    ++transitions;
                    adjacent += std::abs(value - prev) == 1 ? 1 : 0;
                }
                prev = value;
            }
        }
    }
    REQUIRE(transitions > 1000);
    const real within = static_cast<real>(adjacent) / transitions;

    // Unconditional: P(|X - Y| = 1) for independent draws from the marginal.
    real unconditional = 0.0;
    for (const auto& [lvl, cnt] : level_counts) {
        const real p = static_cast<real>(cnt) / total_levels;
        const auto it = level_counts.find(lvl + 1);
        if (it != level_counts.end()) {
            unconditional += 2.0 * p * static_cast<real>(it->second) / total_levels;
        }
    }
    CHECK(within > unconditional + 0.1);
}

// Planted ordinality: the highest-PMI co-occurring income token of level i is
// level i-1 or i+1 (counted over person-level co-occurrence).
TEST_CASE("income co-occurrence peaks at adjacent levels") {
    GeneratorConfig cfg = test::tiny_generator(3000, 2);
    cfg.n_income_levels = 20;  // keep every level well-sampled
    cfg.events_per_person = {25.0, 0.2};
    const auto people = generate_population(cfg);

    const int n = cfg.n_income_levels;
    std::vector<std::vector<long>> co(n, std::vector<long>(n, 0));
    std::vector<long> occur(n, 0);
    for (const auto& p : people) {
        std::set<int> levels;
        for (const auto& ev : p.events) {
            for (const auto& [name, value] : ev.attributes) {
                if (name == "INC") levels.insert(value);
            }
        }
        for (int a : levels) {
            ++occur[a];
            for (int b : levels) {
                if (a != b) ++co[a][b];
            }
        }
    }
    int checked = 0, hits = 0;
    for (int i = 0; i < n; ++i) {
        if (occur[i] < 40) continue;
        real best = -1.0;
        int arg = -1;
        for (int j = 0; j < n; ++j) {
            if (j == i || occur[j] == 0 || co[i][j] == 0) continue;
            const real pmi = static_cast<real>(co[i][j]) / (static_cast<real>(occur[i]) *
                                                            static_cast<real>(occur[j]));
            if (pmi > best) {
                best = pmi;
                arg = j;
            }
        }
        if (arg < 0) continue;
        ++checked;
        hits += (arg == i - 1 || arg == i + 1) ? 1 : 0;
    }
    REQUIRE(checked >= n - 2);
    CHECK(hits == checked);
}

TEST_CASE("zero hazard gives a death rate near one half") {
    GeneratorConfig cfg = test::tiny_generator(4000, 5);
    cfg.hazard_coefficients = {};
    cfg.censoring_rate = 0.0;
    const auto people = generate_population(cfg);
    const auto outcomes = assign_outcomes(people, cfg);
    long died = 0;
    for (const auto& o : outcomes) died += o.true_outcome == TrueOutcome::died ? 1 : 0;
    const real rate = static_cast<real>(died) / outcomes.size();
    const real sigma = std::sqrt(0.25 / outcomes.size());
    CHECK(std::fabs(rate - 0.5) < 3.0 * sigma);
}

TEST_CASE("PU labels follow the convention") {
    GeneratorConfig cfg = test::tiny_generator(500, 9);
    cfg.censoring_rate = 0.2;
    const auto people = generate_population(cfg);
    const auto outcomes = assign_outcomes(people, cfg);
    for (const auto& o : outcomes) {
        if (o.positive_label) CHECK(o.true_outcome == TrueOutcome::died);
        if (o.true_outcome == TrueOutcome::censored) CHECK(!o.positive_label);
    }

    cfg.censoring_rate = 0.0;
    const auto o2 = assign_outcomes(people, cfg);
    for (const auto& o : o2) {
        CHECK(o.true_outcome != TrueOutcome::censored);
        CHECK(o.positive_label == (o.true_outcome == TrueOutcome::died));
    }
}

// Closed-form logit oracle: death rates among chapter-F-flagged vs unflagged
// persons against the sigmoid evaluated on the planted coefficients.
TEST_CASE("hazard coefficient on the chapter flag matches the sigmoid oracle") {
    GeneratorConfig cfg = test::tiny_generator(6000, 13);
    cfg.events_per_person = {20.0, 0.2};
    cfg.censoring_rate = 0.0;
    cfg.hazard_coefficients = {{"chapter_f", 3.0}, {"bias", -1.0}};
    const auto people = generate_population(cfg);
    const auto outcomes = assign_outcomes(people, cfg);

    long died_f = 0, n_f = 0, died_o = 0, n_o = 0;
    for (std::size_t i = 0; i < people.size(); ++i) {
        const Vec f = latent_features(people[i], cfg, {"chapter_f"});
        const bool dead = outcomes[i].true_outcome == TrueOutcome::died;
        if (f[0] > 0.5) {
            ++n_f;
            died_f += dead ? 1 : 0;
        } else {
            ++n_o;
            died_o += dead ? 1 : 0;
        }
    }
    REQUIRE(n_f > 300);
    REQUIRE(n_o > 300);
    const real sigmoid_f = 1.0 / (1.0 + std::exp(-(3.0 - 1.0)));
    const real sigmoid_o = 1.0 / (1.0 + std::exp(1.0));
    const real rate_f = static_cast<real>(died_f) / n_f;
    const real rate_o = static_cast<real>(died_o) / n_o;
    CHECK(std::fabs(rate_f - sigmoid_f) < 3.0 * std::sqrt(sigmoid_f * (1 - sigmoid_f) / n_f));
    CHECK(std::fabs(rate_o - sigmoid_o) < 3.0 * std::sqrt(sigmoid_o * (1 - sigmoid_o) / n_o));
}

TEST_CASE("split sizes are exact and membership is seeded") {
    const auto s = split_dataset(100, {0.7, 0.15, 0.15}, 3);
    CHECK(s.train.size() == 70);
    CHECK(s.validation.size() == 15);
    CHECK(s.test.size() == 15);

    const auto all_train = split_dataset(50, {1.0, 0.0, 0.0}, 3);
    CHECK(all_train.train.size() == 50);
    CHECK(all_train.validation.empty());
    CHECK(all_train.test.empty());

    // disjoint and exhaustive
    std::set<int> seen;
    for (int i : s.train) seen.insert(i);
    for (int i : s.validation) seen.insert(i);
    for (int i : s.test) seen.insert(i);
    CHECK(seen.size() == 100);

    const auto a = split_dataset(1000, {0.7, 0.15, 0.15}, 21);
    const auto b = split_dataset(1000, {0.7, 0.15, 0.15}, 21);
    const auto c = split_dataset(1000, {0.7, 0.15, 0.15}, 22);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    CHECK(a.train != c.train);

    CHECK_THROWS_AS(split_dataset(10, {0.5, 0.2, 0.2}, 0), ValidationError);
}

TEST_CASE("people JSONL round trips") {
    const GeneratorConfig cfg = test::tiny_generator(15, 21);
    const auto people = generate_population(cfg);
    const auto outcomes = assign_outcomes(people, cfg);
    const std::string path = "/tmp/lifeseq_roundtrip.jsonl";
    write_people_jsonl(path, people, outcomes);
    const Dataset ds = read_people_jsonl(path);
    REQUIRE(ds.people.size() == people.size());
    for (std::size_t i = 0; i < people.size(); ++i) {
        CHECK(ds.people[i].person_id == people[i].person_id);
        CHECK(ds.people[i].events.size() == people[i].events.size());
        CHECK(ds.outcomes[i].positive_label == outcomes[i].positive_label);
        CHECK(ds.outcomes[i].item_responses == outcomes[i].item_responses);
        for (std::size_t e = 0; e < people[i].events.size(); ++e) {
            CHECK(ds.people[i].events[e].attributes == people[i].events[e].attributes);
        }
    }
}
