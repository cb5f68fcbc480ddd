#include "lifeseq/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "lifeseq/rng.hpp"

namespace lifeseq {

using json = nlohmann::ordered_json;

namespace {

// Wraps a JSON object; every accessed key is recorded and leftovers are
// reported as errors, so typos in config files cannot pass silently.
class Strict {
public:
    Strict(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError("config: '" + path_ + "' must be an object");
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const std::exception&) {
            throw ValidationError("config: bad value for '" + path_ + key + "'");
        }
    }

    void get_date(const char* key, Date& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        out = parse_date(j_.at(key).get<std::string>());
    }

    const json& raw(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() {
        for (const auto& [key, value] : j_.items()) {
            (void)value;
            if (!seen_.count(key)) {
                throw ValidationError("config: unknown key '" + path_ + key + "'");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

CoefMap parse_coefs(const json& j, const std::string& path) {
    if (!j.is_object()) throw ValidationError("config: '" + path + "' must be an object");
    CoefMap out;
    for (const auto& [key, value] : j.items()) out[key] = value.get<real>();
    return out;
}

void parse_generator(const json& j, GeneratorConfig& g) {
    Strict s(j, "generator.");
    s.get("population_size", g.population_size);
    s.get_date("start_date", g.start_date);
    s.get_date("end_date", g.end_date);
    s.get("n_income_levels", g.n_income_levels);
    s.get("n_diagnosis_categories", g.n_diagnosis_categories);
    s.get("n_diagnosis_chapters", g.n_diagnosis_chapters);
    s.get("n_job_types", g.n_job_types);
    s.get("n_job_groups", g.n_job_groups);
    s.get("n_municipalities", g.n_municipalities);
    if (s.has("events_per_person")) {
        Strict e(s.raw("events_per_person"), "generator.events_per_person.");
        e.get("mean", g.events_per_person.mean);
        e.get("dispersion", g.events_per_person.dispersion);
        e.finish();
    }
    if (s.has("hazard_coefficients")) {
        g.hazard_coefficients = parse_coefs(s.raw("hazard_coefficients"), "generator.hazard_coefficients");
    }
    s.get("censoring_rate", g.censoring_rate);
    s.get("seed", g.seed);
    s.get("labor_fraction", g.labor_fraction);
    s.get("income_step_prob", g.income_step_prob);
    s.get("favorite_chapter_prob", g.favorite_chapter_prob);
    s.get("favorite_group_prob", g.favorite_group_prob);
    s.get("xor_category_a", g.xor_category_a);
    s.get("xor_category_b", g.xor_category_b);
    if (s.has("item_coefficients")) {
        const json& arr = s.raw("item_coefficients");
        if (!arr.is_array() || arr.size() != 4) {
            throw ValidationError("config: generator.item_coefficients must be an array of 4 maps");
        }
        for (int i = 0; i < 4; ++i) {
            g.item_coefficients[i] = parse_coefs(arr[i], "generator.item_coefficients[i]");
        }
    }
    s.get("item_noise_scale", g.item_noise_scale);
    s.finish();
}

void parse_model(const json& j, ModelConfig& m) {
    Strict s(j, "model.");
    s.get("hidden", m.enc.d);
    s.get("layers", m.enc.n_layers);
    s.get("heads", m.enc.n_heads);
    s.get("local_heads", m.enc.n_local_heads);
    s.get("local_window", m.enc.local_window);
    s.get("random_features", m.enc.n_random_features);
    s.get("pff_hidden", m.enc.pff_hidden);
    s.get("max_len", m.max_len);
    s.get("mlm_logit_scale", m.mlm_logit_scale);
    s.finish();
}

void parse_pretrain(const json& j, PretrainConfig& p) {
    Strict s(j, "pretrain.");
    s.get("mask_fraction", p.mask_fraction);
    s.get("mask_substitute", p.mask_substitute);
    s.get("mask_keep", p.mask_keep);
    s.get("mask_random", p.mask_random);
    s.get("sop_corruption_rate", p.sop_corruption_rate);
    s.get("aug_sequence_downsample", p.aug_sequence_downsample);
    s.get("aug_temporal_noise", p.aug_temporal_noise);
    s.get("aug_background_mask", p.aug_background_mask);
    s.get("aug_token_downsample", p.aug_token_downsample);
    s.get("token_drop_fraction", p.token_drop_fraction);
    s.get("epochs", p.epochs);
    s.get("batch_size", p.batch_size);
    s.get("epoch_size", p.epoch_size);
    s.get("val_subset", p.val_subset);
    s.get("peak_lr", p.peak_lr);
    s.get("weight_decay", p.weight_decay);
    s.get("grad_clip", p.grad_clip);
    s.get("perplexity_mlm_weight", p.perplexity_mlm_weight);
    s.get("perplexity_sop_weight", p.perplexity_sop_weight);
    s.get("sop_class_weights", p.sop_class_weights);
    s.get("sop_smoothing", p.sop_smoothing);
    s.finish();
}

void parse_finetune(const json& j, FinetuneConfig& f) {
    Strict s(j, "finetune.");
    s.get("decoder_lr", f.decoder_lr);
    s.get("layer_lr_decay", f.layer_lr_decay);
    s.get("lr_gamma", f.lr_gamma);
    s.get("decoder_weight_decay", f.decoder_weight_decay);
    s.get("encoder_weight_decay", f.encoder_weight_decay);
    s.get("epochs", f.epochs);
    s.get("batch_size", f.batch_size);
    s.get("epoch_size", f.epoch_size);
    s.get("patience", f.patience);
    s.get("grad_clip", f.grad_clip);
    s.get("asymmetric_c", f.asymmetric_c);
    s.get("select_c_by_aul", f.select_c_by_aul);
    s.get("c_grid", f.c_grid);
    s.get("difficulty_resampling", f.difficulty_resampling);
    s.get("difficulty_ewa_alpha", f.difficulty_ewa_alpha);
    s.get("difficulty_clip", f.difficulty_clip);
    s.get("difficulty_init", f.difficulty_init);
    if (s.has("personality_loss")) {
        Strict pl(s.raw("personality_loss"), "finetune.personality_loss.");
        pl.get("cdw_alpha", f.personality_loss.cdw_alpha);
        pl.get("focal_gamma", f.personality_loss.focal_gamma);
        pl.get("smoothing_alpha", f.personality_loss.smoothing_alpha);
        pl.get("mix_cdw", f.personality_loss.mix_cdw);
        pl.get("mix_focal", f.personality_loss.mix_focal);
        pl.get("mix_smoothing", f.personality_loss.mix_smoothing);
        pl.finish();
    }
    s.finish();
}

void parse_metrics(const json& j, MetricsConfig& m) {
    Strict s(j, "metrics.");
    s.get("bootstrap_resamples", m.bootstrap_resamples);
    s.get("level", m.level);
    s.get("threshold", m.threshold);
    if (s.has("positive_prevalence") && !s.raw("positive_prevalence").is_null()) {
        m.positive_prevalence = s.raw("positive_prevalence").get<real>();
    }
    s.finish();
}

}  // namespace

void RunConfig::propagate_seed() {
    generator.seed = derive_seed(seed, "generator");
    model.init_seed = derive_seed(seed, "model-init");
    pretrain.seed = derive_seed(seed, "pretrain");
    finetune.seed = derive_seed(seed, "finetune");
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    Strict s(j, "");
    s.get("schema_version", cfg.schema_version);
    if (cfg.schema_version != 1) {
        throw ValidationError("config: unsupported schema_version " +
                              std::to_string(cfg.schema_version));
    }
    s.get("seed", cfg.seed);
    if (s.has("generator")) parse_generator(s.raw("generator"), cfg.generator);
    if (s.has("tokenizer")) {
        Strict t(s.raw("tokenizer"), "tokenizer.");
        t.get("max_len", cfg.tokenizer.max_len);
        t.get_date("origin_date", cfg.tokenizer.origin_date);
        t.get("min_frequency", cfg.min_frequency);
        t.finish();
    }
    s.get("split_ratios", cfg.split_ratios);
    if (s.has("model")) parse_model(s.raw("model"), cfg.model);
    if (s.has("pretrain")) parse_pretrain(s.raw("pretrain"), cfg.pretrain);
    if (s.has("finetune")) parse_finetune(s.raw("finetune"), cfg.finetune);
    if (s.has("task")) {
        const std::string t = s.raw("task").get<std::string>();
        if (t == "mortality") {
            cfg.task = Task::mortality;
        } else if (t == "personality") {
            cfg.task = Task::personality;
        } else {
            throw ValidationError("config: task must be 'mortality' or 'personality'");
        }
    }
    if (s.has("metrics")) parse_metrics(s.raw("metrics"), cfg.metrics);
    s.finish();

    cfg.model.max_len = cfg.tokenizer.max_len;
    cfg.propagate_seed();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["seed"] = cfg.seed;
    json g;
    g["population_size"] = cfg.generator.population_size;
    g["start_date"] = format_date(cfg.generator.start_date);
    g["end_date"] = format_date(cfg.generator.end_date);
    g["n_income_levels"] = cfg.generator.n_income_levels;
    g["n_diagnosis_categories"] = cfg.generator.n_diagnosis_categories;
    g["n_diagnosis_chapters"] = cfg.generator.n_diagnosis_chapters;
    g["n_job_types"] = cfg.generator.n_job_types;
    g["n_job_groups"] = cfg.generator.n_job_groups;
    g["n_municipalities"] = cfg.generator.n_municipalities;
    g["events_per_person"] = {{"mean", cfg.generator.events_per_person.mean},
                              {"dispersion", cfg.generator.events_per_person.dispersion}};
    g["hazard_coefficients"] = cfg.generator.hazard_coefficients;
    g["censoring_rate"] = cfg.generator.censoring_rate;
    g["labor_fraction"] = cfg.generator.labor_fraction;
    g["income_step_prob"] = cfg.generator.income_step_prob;
    g["favorite_chapter_prob"] = cfg.generator.favorite_chapter_prob;
    g["favorite_group_prob"] = cfg.generator.favorite_group_prob;
    g["xor_category_a"] = cfg.generator.xor_category_a;
    g["xor_category_b"] = cfg.generator.xor_category_b;
    g["item_coefficients"] = cfg.generator.item_coefficients;
    g["item_noise_scale"] = cfg.generator.item_noise_scale;
    j["generator"] = std::move(g);
    j["tokenizer"] = {{"max_len", cfg.tokenizer.max_len},
                      {"origin_date", format_date(cfg.tokenizer.origin_date)},
                      {"min_frequency", cfg.min_frequency}};
    j["split_ratios"] = cfg.split_ratios;
    j["model"] = {{"hidden", cfg.model.enc.d},
                  {"layers", cfg.model.enc.n_layers},
                  {"heads", cfg.model.enc.n_heads},
                  {"local_heads", cfg.model.enc.n_local_heads},
                  {"local_window", cfg.model.enc.local_window},
                  {"random_features", cfg.model.enc.n_random_features},
                  {"pff_hidden", cfg.model.enc.pff_hidden},
                  {"max_len", cfg.model.max_len},
                  {"mlm_logit_scale", cfg.model.mlm_logit_scale}};
    j["pretrain"] = {{"mask_fraction", cfg.pretrain.mask_fraction},
                     {"mask_substitute", cfg.pretrain.mask_substitute},
                     {"mask_keep", cfg.pretrain.mask_keep},
                     {"mask_random", cfg.pretrain.mask_random},
                     {"sop_corruption_rate", cfg.pretrain.sop_corruption_rate},
                     {"aug_sequence_downsample", cfg.pretrain.aug_sequence_downsample},
                     {"aug_temporal_noise", cfg.pretrain.aug_temporal_noise},
                     {"aug_background_mask", cfg.pretrain.aug_background_mask},
                     {"aug_token_downsample", cfg.pretrain.aug_token_downsample},
                     {"token_drop_fraction", cfg.pretrain.token_drop_fraction},
                     {"epochs", cfg.pretrain.epochs},
                     {"batch_size", cfg.pretrain.batch_size},
                     {"epoch_size", cfg.pretrain.epoch_size},
                     {"val_subset", cfg.pretrain.val_subset},
                     {"peak_lr", cfg.pretrain.peak_lr},
                     {"weight_decay", cfg.pretrain.weight_decay},
                     {"grad_clip", cfg.pretrain.grad_clip},
                     {"perplexity_mlm_weight", cfg.pretrain.perplexity_mlm_weight},
                     {"perplexity_sop_weight", cfg.pretrain.perplexity_sop_weight},
                     {"sop_class_weights", cfg.pretrain.sop_class_weights},
                     {"sop_smoothing", cfg.pretrain.sop_smoothing}};
    j["finetune"] = {{"decoder_lr", cfg.finetune.decoder_lr},
                     {"layer_lr_decay", cfg.finetune.layer_lr_decay},
                     {"lr_gamma", cfg.finetune.lr_gamma},
                     {"decoder_weight_decay", cfg.finetune.decoder_weight_decay},
                     {"encoder_weight_decay", cfg.finetune.encoder_weight_decay},
                     {"epochs", cfg.finetune.epochs},
                     {"batch_size", cfg.finetune.batch_size},
                     {"epoch_size", cfg.finetune.epoch_size},
                     {"patience", cfg.finetune.patience},
                     {"grad_clip", cfg.finetune.grad_clip},
                     {"asymmetric_c", cfg.finetune.asymmetric_c},
                     {"select_c_by_aul", cfg.finetune.select_c_by_aul},
                     {"c_grid", cfg.finetune.c_grid},
                     {"difficulty_resampling", cfg.finetune.difficulty_resampling},
                     {"difficulty_ewa_alpha", cfg.finetune.difficulty_ewa_alpha},
                     {"difficulty_clip", cfg.finetune.difficulty_clip},
                     {"difficulty_init", cfg.finetune.difficulty_init},
                     {"personality_loss",
                      {{"cdw_alpha", cfg.finetune.personality_loss.cdw_alpha},
                       {"focal_gamma", cfg.finetune.personality_loss.focal_gamma},
                       {"smoothing_alpha", cfg.finetune.personality_loss.smoothing_alpha},
                       {"mix_cdw", cfg.finetune.personality_loss.mix_cdw},
                       {"mix_focal", cfg.finetune.personality_loss.mix_focal},
                       {"mix_smoothing", cfg.finetune.personality_loss.mix_smoothing}}}};
    j["task"] = cfg.task == Task::mortality ? "mortality" : "personality";
    json m;
    m["bootstrap_resamples"] = cfg.metrics.bootstrap_resamples;
    m["level"] = cfg.metrics.level;
    m["threshold"] = cfg.metrics.threshold;
    if (cfg.metrics.positive_prevalence) {
        m["positive_prevalence"] = *cfg.metrics.positive_prevalence;
    } else {
        m["positive_prevalence"] = nullptr;
    }
    j["metrics"] = std::move(m);
    return j.dump(2);
}

}  // namespace lifeseq
