#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lifeseq/common.hpp"
#include "lifeseq/date.hpp"

namespace lifeseq {

enum class EventKind { labor, health };

struct EventRecord {
    Date date;
    EventKind kind = EventKind::labor;
    // feature name -> category id; names double as token prefixes.
    // Labor events carry 3..7 attributes, health events 2..3.
    std::vector<std::pair<std::string, int>> attributes;
};

struct PersonRecord {
    std::int64_t person_id = 0;
    int sex = 0;     // 0 female, 1 male
    int origin = 0;  // 0 national, 1 foreign
    int birth_year = 1970;
    int birth_month = 1;
    std::vector<EventRecord> events;  // sorted non-decreasing by date
};

enum class TrueOutcome { died, survived, censored };

struct OutcomeRecord {
    std::int64_t person_id = 0;
    bool positive_label = false;       // positive <=> observed death
    TrueOutcome true_outcome = TrueOutcome::survived;  // generator-internal; never fed to models
    std::array<int, 4> item_responses{};               // ordinal, levels 0..4
};

// Latent per-person hazard/trait features. Log-odds weights are looked up by
// these names; absent keys contribute zero.
//   bias       : 1
//   age        : (age at end_date - 45) / 10
//   income     : 2 * (income base level / (n_income_levels - 1)) - 1
//   chapter_f  : 1 if any diagnosis falls in chapter index 5 ("F")
//   sex        : 1 for male
//   xor_pair   : 1 if exactly one of the two planted diagnosis categories occurs
using CoefMap = std::map<std::string, real>;

struct NoiseCount {
    real mean = 40.0;
    real dispersion = 0.5;  // extra-Poisson dispersion; 0 gives plain Poisson
};

struct GeneratorConfig {
    int population_size = 2000;
    Date start_date{2008, 1, 1};
    Date end_date{2015, 12, 31};
    int n_income_levels = 100;
    int n_diagnosis_categories = 64;  // grouped into n_diagnosis_chapters
    int n_diagnosis_chapters = 8;
    int n_job_types = 40;  // grouped into n_job_groups
    int n_job_groups = 4;
    int n_municipalities = 12;
    NoiseCount events_per_person;
    CoefMap hazard_coefficients{{"bias", -1.0}, {"age", 0.8}, {"chapter_f", 1.5}, {"sex", 0.5}};
    real censoring_rate = 0.1;
    std::uint64_t seed = 0;

    // --- planted-structure knobs (all deterministic under seed) ---
    real labor_fraction = 0.7;          // share of events that are labor events
    real income_step_prob = 0.45;       // chance the income walk moves +/-1 per labor event
    real favorite_chapter_prob = 0.75;  // health event stays in the person's favorite chapter
    real favorite_group_prob = 0.8;     // labor event stays in the person's favorite job group
    int xor_category_a = -1;            // diagnosis categories for the xor_pair feature
    int xor_category_b = -1;
    // Ordered-logit weights per personality item; same feature names as above.
    std::array<CoefMap, 4> item_coefficients{
        CoefMap{{"income", 2.0}},
        CoefMap{{"chapter_f", 2.5}},
        CoefMap{{"age", -1.5}},
        CoefMap{{"sex", 1.0}},
    };
    real item_noise_scale = 1.0;  // scale of the logistic noise; 0 makes items deterministic
};

void validate(const GeneratorConfig& cfg);

std::vector<PersonRecord> generate_population(const GeneratorConfig& cfg);

std::vector<OutcomeRecord> assign_outcomes(const std::vector<PersonRecord>& population,
                                           const GeneratorConfig& cfg);

struct DatasetSplit {
    std::vector<int> train;  // indices into the population vector
    std::vector<int> validation;
    std::vector<int> test;
};

DatasetSplit split_dataset(std::size_t population_size, const std::array<real, 3>& ratios,
                           std::uint64_t seed);

// Latent features used by outcomes; exposed so tests can evaluate the
// closed-form sigmoid oracle against empirical rates.
Vec latent_features(const PersonRecord& person, const GeneratorConfig& cfg,
                    const std::vector<std::string>& names);
real linear_score(const PersonRecord& person, const GeneratorConfig& cfg, const CoefMap& coefs);

}  // namespace lifeseq
