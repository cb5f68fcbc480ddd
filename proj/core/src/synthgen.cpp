#include "lifeseq/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "lifeseq/rng.hpp"

namespace lifeseq {

namespace {

int clamp_int(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

int cats_per_chapter(const GeneratorConfig& cfg) {
    return (cfg.n_diagnosis_categories + cfg.n_diagnosis_chapters - 1) / cfg.n_diagnosis_chapters;
}

int chapter_of(const GeneratorConfig& cfg, int category) {
    return std::min(category / cats_per_chapter(cfg), cfg.n_diagnosis_chapters - 1);
}

// Chapter index of the "F" analogue: sixth chapter when present.
int chapter_f_index(const GeneratorConfig& cfg) {
    return std::min(5, cfg.n_diagnosis_chapters - 1);
}

struct Latents {
    int income_base = 0;
    int favorite_chapter = 0;
    int favorite_group = 0;
    int municipality = 0;
};

Latents draw_latents(const GeneratorConfig& cfg, Rng& rng) {
    Latents lat;
    lat.income_base = rng.below_int(cfg.n_income_levels);
    lat.favorite_chapter = rng.below_int(cfg.n_diagnosis_chapters);
    lat.favorite_group = rng.below_int(cfg.n_job_groups);
    // Municipality tracks the income base so the concept space acquires a
    // smooth socio-economic gradient.
    const int target = static_cast<int>(
        static_cast<real>(lat.income_base) / cfg.n_income_levels * cfg.n_municipalities);
    lat.municipality = clamp_int(target + rng.below_int(3) - 1, 0, cfg.n_municipalities - 1);
    return lat;
}

}  // namespace

void validate(const GeneratorConfig& cfg) {
    auto need = [](bool ok, const std::string& field, const std::string& why) {
        if (!ok) throw ValidationError("generator config: field '" + field + "' " + why);
    };
    need(cfg.population_size >= 1, "population_size", "must be >= 1");
    need(cfg.n_income_levels >= 2, "n_income_levels", "must be >= 2");
    need(cfg.n_diagnosis_categories >= 2, "n_diagnosis_categories", "must be >= 2");
    need(cfg.n_diagnosis_chapters >= 2 && cfg.n_diagnosis_chapters <= cfg.n_diagnosis_categories,
         "n_diagnosis_chapters", "must be in [2, n_diagnosis_categories]");
    need(cfg.n_job_types >= 2, "n_job_types", "must be >= 2");
    need(cfg.n_job_groups >= 2 && cfg.n_job_groups <= cfg.n_job_types, "n_job_groups",
         "must be in [2, n_job_types]");
    need(cfg.n_municipalities >= 2, "n_municipalities", "must be >= 2");
    need(cfg.censoring_rate >= 0.0 && cfg.censoring_rate <= 0.5, "censoring_rate",
         "must lie in [0, 0.5]");
    need(is_valid_date(cfg.start_date), "start_date", "is not a valid date");
    need(is_valid_date(cfg.end_date), "end_date", "is not a valid date");
    need(cfg.start_date < cfg.end_date, "end_date", "must come after start_date");
    need(cfg.events_per_person.mean >= 0.0, "events_per_person.mean", "must be >= 0");
    need(cfg.events_per_person.dispersion >= 0.0, "events_per_person.dispersion", "must be >= 0");
    need(cfg.labor_fraction >= 0.0 && cfg.labor_fraction <= 1.0, "labor_fraction",
         "must lie in [0, 1]");
    need(cfg.xor_category_a < cfg.n_diagnosis_categories, "xor_category_a", "out of range");
    need(cfg.xor_category_b < cfg.n_diagnosis_categories, "xor_category_b", "out of range");
}

std::vector<PersonRecord> generate_population(const GeneratorConfig& cfg) {
    validate(cfg);
    const long start_serial = days_from_civil(cfg.start_date);
    const long end_serial = days_from_civil(cfg.end_date);
    const int n_industries = 5 * cfg.n_job_groups;
    const int cpc = cats_per_chapter(cfg);
    const int types_per_group = (cfg.n_job_types + cfg.n_job_groups - 1) / cfg.n_job_groups;

    std::vector<PersonRecord> population(cfg.population_size);
    for (int idx = 0; idx < cfg.population_size; ++idx) {
        // Counter-based per-person stream: generation order never matters.
        Rng rng(derive_seed(cfg.seed, "person", static_cast<std::uint64_t>(idx)));
        PersonRecord& p = population[idx];
        p.person_id = idx;
        p.sex = rng.bernoulli(0.5) ? 1 : 0;
        p.origin = rng.bernoulli(0.12) ? 1 : 0;
        p.birth_year = cfg.end_date.year - 30 - rng.below_int(26);  // ages ~30..55 at end
        p.birth_month = 1 + rng.below_int(12);

        const Latents lat = draw_latents(cfg, rng);

        real lambda = cfg.events_per_person.mean;
        if (cfg.events_per_person.dispersion > 0.0 && lambda > 0.0) {
            const real shape = 1.0 / cfg.events_per_person.dispersion;
            lambda *= rng.gamma(shape, 1.0 / shape);
        }
        const int n_events = rng.poisson(lambda);

        // (serial day, forced diagnosis category or -1)
        std::vector<std::pair<long, int>> slots;
        slots.reserve(n_events + 2);
        for (int e = 0; e < n_events; ++e) {
            const long s = start_serial + static_cast<long>(rng.below(end_serial - start_serial + 1));
            slots.emplace_back(s, -1);
        }
        // Planted categories recur a few times so presence survives windowed
        // count-vector views of the history.
        for (int planted : {cfg.xor_category_a, cfg.xor_category_b}) {
            if (planted < 0 || !rng.bernoulli(0.5)) continue;
            const int copies = 1 + rng.poisson(2.0);
            for (int r = 0; r < copies; ++r) {
                slots.emplace_back(
                    start_serial + static_cast<long>(rng.below(end_serial - start_serial + 1)),
                    planted);
            }
        }
        std::stable_sort(slots.begin(), slots.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });

        int income_level = lat.income_base;
        p.events.reserve(slots.size());
        for (const auto& [serial, forced_cat] : slots) {
            EventRecord ev;
            ev.date = civil_from_days(serial);
            const bool health = forced_cat >= 0 || !rng.bernoulli(cfg.labor_fraction);
            if (health) {
                ev.kind = EventKind::health;
                int category;
                if (forced_cat >= 0) {
                    category = forced_cat;
                } else {
                    const int chapter = rng.bernoulli(cfg.favorite_chapter_prob)
                                            ? lat.favorite_chapter
                                            : rng.below_int(cfg.n_diagnosis_chapters);
                    category = std::min(chapter * cpc + rng.below_int(cpc),
                                        cfg.n_diagnosis_categories - 1);
                }
                ev.attributes.emplace_back("DIA", category);
                ev.attributes.emplace_back("PUT", rng.below_int(2));
                if (rng.bernoulli(0.5)) ev.attributes.emplace_back("URG", rng.below_int(3));
            } else {
                ev.kind = EventKind::labor;
                // Income performs a +/-1 persistence walk around the base level;
                // this is what plants the ordinal co-occurrence structure.
                if (rng.bernoulli(cfg.income_step_prob)) {
                    income_level = clamp_int(income_level + (rng.bernoulli(0.5) ? 1 : -1), 0,
                                             cfg.n_income_levels - 1);
                }
                const int group = rng.bernoulli(cfg.favorite_group_prob)
                                      ? lat.favorite_group
                                      : rng.below_int(cfg.n_job_groups);
                const int job = std::min(group * types_per_group + rng.below_int(types_per_group),
                                         cfg.n_job_types - 1);
                ev.attributes.emplace_back("INC", income_level);
                ev.attributes.emplace_back("JOB", job);
                ev.attributes.emplace_back("MUN", lat.municipality);
                if (rng.bernoulli(0.7)) ev.attributes.emplace_back("IND", group * 5 + rng.below_int(5));
                if (rng.bernoulli(0.7)) ev.attributes.emplace_back("LFS", rng.below_int(8));
                if (rng.bernoulli(0.35)) ev.attributes.emplace_back("TAX", rng.below_int(6));
                (void)n_industries;
            }
            // Canonical attribute order: keeps sentences identical whether a
            // dataset is used in memory or round-tripped through JSONL.
            std::sort(ev.attributes.begin(), ev.attributes.end());
            p.events.push_back(std::move(ev));
        }
    }
    return population;
}

Vec latent_features(const PersonRecord& person, const GeneratorConfig& cfg,
                    const std::vector<std::string>& names) {
    const int f_chapter = chapter_f_index(cfg);
    bool has_f = false, has_a = false, has_b = false;
    real income_sum = 0.0;
    int income_n = 0;
    for (const auto& ev : person.events) {
        for (const auto& [name, value] : ev.attributes) {
            if (name == "DIA") {
                if (chapter_of(cfg, value) == f_chapter) has_f = true;
                if (value == cfg.xor_category_a) has_a = true;
                if (value == cfg.xor_category_b) has_b = true;
            } else if (name == "INC") {
                income_sum += value;
                ++income_n;
            }
        }
    }
    const real age = completed_years(person.birth_year, person.birth_month, cfg.end_date);
    Vec out;
    out.reserve(names.size());
    for (const auto& name : names) {
        if (name == "bias") {
            out.push_back(1.0);
        } else if (name == "age") {
            out.push_back((age - 45.0) / 10.0);
        } else if (name == "income") {
            const real mean_level = income_n > 0 ? income_sum / income_n : 0.5 * (cfg.n_income_levels - 1);
            out.push_back(2.0 * mean_level / (cfg.n_income_levels - 1) - 1.0);
        } else if (name == "chapter_f") {
            out.push_back(has_f ? 1.0 : 0.0);
        } else if (name == "sex") {
            out.push_back(person.sex == 1 ? 1.0 : 0.0);
        } else if (name == "xor_pair") {
            out.push_back(has_a != has_b ? 1.0 : 0.0);
        } else {
            throw ValidationError("unknown latent feature '" + name + "'");
        }
    }
    return out;
}

real linear_score(const PersonRecord& person, const GeneratorConfig& cfg, const CoefMap& coefs) {
    std::vector<std::string> names;
    Vec weights;
    names.reserve(coefs.size());
    for (const auto& [name, w] : coefs) {
        names.push_back(name);
        weights.push_back(w);
    }
    const Vec feats = latent_features(person, cfg, names);
    real s = 0.0;
    for (std::size_t i = 0; i < feats.size(); ++i) s += feats[i] * weights[i];
    return s;
}

std::vector<OutcomeRecord> assign_outcomes(const std::vector<PersonRecord>& population,
                                           const GeneratorConfig& cfg) {
    if (population.empty()) throw ValidationError("assign_outcomes: population is empty");
    std::vector<OutcomeRecord> outcomes(population.size());
    // Ordered-logit cutpoints shared by all items.
    static constexpr real kCuts[4] = {-3.0, -1.0, 1.0, 3.0};
    for (std::size_t i = 0; i < population.size(); ++i) {
        const PersonRecord& p = population[i];
        Rng rng(derive_seed(cfg.seed, "outcome", static_cast<std::uint64_t>(p.person_id)));
        OutcomeRecord& o = outcomes[i];
        o.person_id = p.person_id;

        const real hazard = linear_score(p, cfg, cfg.hazard_coefficients);
        const bool died = rng.uniform() < 1.0 / (1.0 + std::exp(-hazard));
        const bool censored = rng.bernoulli(cfg.censoring_rate);
        o.true_outcome = censored ? TrueOutcome::censored
                                  : (died ? TrueOutcome::died : TrueOutcome::survived);
        // PU convention: only observed deaths are labeled; negatives and
        // censored cases all land in the unlabeled set.
        o.positive_label = died && !censored;

        for (int item = 0; item < 4; ++item) {
            const real u = linear_score(p, cfg, cfg.item_coefficients[item]) +
                           cfg.item_noise_scale * rng.logistic();
            int level = 0;
            for (real cut : kCuts) level += u > cut ? 1 : 0;
            o.item_responses[item] = level;
        }
    }
    return outcomes;
}

DatasetSplit split_dataset(std::size_t population_size, const std::array<real, 3>& ratios,
                           std::uint64_t seed) {
    real total = ratios[0] + ratios[1] + ratios[2];
    if (std::fabs(total - 1.0) > 1e-9) {
        throw ValidationError("split ratios must sum to 1 (got " + std::to_string(total) + ")");
    }
    for (real r : ratios) {
        if (r < 0.0) throw ValidationError("split ratios must be nonnegative");
    }
    const auto n = static_cast<long>(population_size);
    std::array<long, 3> counts{};
    std::array<real, 3> fractional{};
    long assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const real exact = ratios[i] * static_cast<real>(n);
        counts[i] = static_cast<long>(std::floor(exact + 1e-12));
        fractional[i] = exact - static_cast<real>(counts[i]);
        assigned += counts[i];
    }
    // Largest-remainder rounding, index as the deterministic tie break.
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (fractional[i] > fractional[best] + 1e-12) best = i;
        }
        ++counts[best];
        fractional[best] = -1.0;
        ++assigned;
    }

    std::vector<int> order(population_size);
    for (std::size_t i = 0; i < population_size; ++i) order[i] = static_cast<int>(i);
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(order);

    DatasetSplit split;
    auto it = order.begin();
    split.train.assign(it, it + counts[0]);
    it += counts[0];
    split.validation.assign(it, it + counts[1]);
    it += counts[1];
    split.test.assign(it, it + counts[2]);
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace lifeseq
