// lifeseq command-line driver: data generation, pretraining, finetuning,
// evaluation, interpretability and concept-space analysis, all reproducible
// from (config, seed).

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lifeseq/baselines.hpp"
#include "lifeseq/checkpoint.hpp"
#include "lifeseq/config.hpp"
#include "lifeseq/finetune.hpp"
#include "lifeseq/interpret.hpp"
#include "lifeseq/metrics.hpp"
#include "lifeseq/model.hpp"
#include "lifeseq/person_io.hpp"
#include "lifeseq/pretrain.hpp"
#include "lifeseq/report.hpp"
#include "lifeseq/space.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using namespace lifeseq;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_override;
};

RunConfig load_config(const GlobalArgs& g) {
    RunConfig cfg;
    if (!g.config_path.empty()) cfg = load_run_config(g.config_path);
    if (g.seed_override) {
        cfg.seed = *g.seed_override;
        cfg.propagate_seed();
    } else if (g.config_path.empty()) {
        cfg.propagate_seed();
    }
    return cfg;
}

std::string out_path(const GlobalArgs& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / name).string();
}

struct PipelineData {
    Dataset dataset;
    DatasetSplit split;
    Vocabulary vocab;
};

std::vector<PersonRecord> select(const std::vector<PersonRecord>& people,
                                 const std::vector<int>& idx) {
    std::vector<PersonRecord> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(people[i]);
    return out;
}

PipelineData load_pipeline_data(const GlobalArgs& g, const RunConfig& cfg,
                                const std::string& data_file, bool build_vocab) {
    PipelineData pd;
    const std::string path = data_file.empty() ? out_path(g, "people.jsonl") : data_file;
    pd.dataset = read_people_jsonl(path);
    pd.split =
        split_dataset(pd.dataset.people.size(), cfg.split_ratios, derive_seed(cfg.seed, "split"));
    if (build_vocab) {
        pd.vocab = Vocabulary::build(select(pd.dataset.people, pd.split.train), cfg.min_frequency);
        pd.vocab.save(out_path(g, "vocab.json"));
    } else {
        pd.vocab = Vocabulary::load(out_path(g, "vocab.json"));
    }
    return pd;
}

std::vector<EncodedSequence> encode_all(const std::vector<PersonRecord>& people,
                                        const Vocabulary& vocab, const TokenizerConfig& tok) {
    std::vector<EncodedSequence> out;
    out.reserve(people.size());
    for (const auto& p : people) out.push_back(encode_person(p, vocab, tok));
    return out;
}

Cohort make_cohort(const Dataset& ds, const std::vector<int>& idx, const Vocabulary& vocab,
                   const TokenizerConfig& tok) {
    Cohort c;
    for (int i : idx) {
        c.sequences.push_back(encode_person(ds.people[i], vocab, tok));
        c.positive.push_back(ds.outcomes[i].positive_label ? 1 : 0);
        c.items.push_back(ds.outcomes[i].item_responses);
    }
    return c;
}

int cmd_gen_data(const GlobalArgs& g, const RunConfig& cfg) {
    auto population = generate_population(cfg.generator);
    auto outcomes = assign_outcomes(population, cfg.generator);
    const std::string path = out_path(g, "people.jsonl");
    write_people_jsonl(path, population, outcomes);
    write_manifest(out_path(g, "manifest-gen.json"), run_config_to_json(cfg), cfg.seed,
                   {{"people", path}});
    std::cerr << "wrote " << population.size() << " persons to " << path << "\n";
    return 0;
}

int cmd_pretrain(const GlobalArgs& g, const RunConfig& cfg, const std::string& data_file) {
    PipelineData pd = load_pipeline_data(g, cfg, data_file, /*build_vocab=*/true);
    const auto train =
        encode_all(select(pd.dataset.people, pd.split.train), pd.vocab, cfg.tokenizer);
    const auto val =
        encode_all(select(pd.dataset.people, pd.split.validation), pd.vocab, cfg.tokenizer);

    Model model(cfg.model, pd.vocab.size());
    const PretrainHistory history =
        pretrain(model, train, val, pd.vocab, cfg.pretrain, [](const PretrainEpoch& e) {
            std::cerr << "epoch " << e.epoch << ": mlm " << e.train_mlm << " sop " << e.train_sop
                      << " val-ppl " << e.val_perplexity << " acc " << e.val_mlm_accuracy << "\n";
        });

    const std::string ckpt = out_path(g, "base.ckpt");
    save_checkpoint(ckpt, model, pd.vocab.hash(), history.epochs.size());
    const std::string hist = out_path(g, "pretrain_history.csv");
    write_history_csv(hist, history);
    write_manifest(out_path(g, "manifest-pretrain.json"), run_config_to_json(cfg), cfg.seed,
                   {{"checkpoint", ckpt}, {"history", hist}, {"vocab", out_path(g, "vocab.json")}});
    std::cerr << "best epoch " << history.best_epoch << " (perplexity " << history.best_perplexity
              << ")\n";
    return 0;
}

int cmd_finetune(const GlobalArgs& g, const RunConfig& cfg, const std::string& data_file,
                 const std::string& checkpoint) {
    PipelineData pd = load_pipeline_data(g, cfg, data_file, /*build_vocab=*/false);
    Model model(cfg.model, pd.vocab.size());
    const std::string base = checkpoint.empty() ? out_path(g, "base.ckpt") : checkpoint;
    load_checkpoint(base, model, pd.vocab.hash());

    const Cohort train = make_cohort(pd.dataset, pd.split.train, pd.vocab, cfg.tokenizer);
    const Cohort val = make_cohort(pd.dataset, pd.split.validation, pd.vocab, cfg.tokenizer);

    FinetuneHistory history;
    std::string task_name;
    if (cfg.task == Task::mortality) {
        task_name = "mortality";
        history = finetune_mortality(model, train, val, cfg.finetune, [](const FinetuneEpoch& e) {
            std::cerr << "epoch " << e.epoch << ": loss " << e.train_loss << " val-aul "
                      << e.val_metric << "\n";
        });
    } else {
        task_name = "personality";
        history = finetune_personality(model, train, val, cfg.finetune, [](const FinetuneEpoch& e) {
            std::cerr << "epoch " << e.epoch << ": loss " << e.train_loss << " val-cqk "
                      << e.val_metric << "\n";
        });
    }

    const std::string ckpt = out_path(g, task_name + ".ckpt");
    save_checkpoint(ckpt, model, pd.vocab.hash(), history.epochs.size());
    const std::string hist = out_path(g, task_name + "_history.csv");
    write_finetune_history_csv(hist, history);

    // per-run report on the validation split
    EvalReport run_report;
    if (cfg.task == Task::mortality) {
        run_report = evaluate_mortality_predictions(
            PuPredictions{score_mortality(model, val), val.positive}, cfg.metrics, nullptr,
            derive_seed(cfg.seed, "finetune-report"));
    } else {
        run_report = evaluate_personality_predictions(val.items, predict_personality(model, val),
                                                      cfg.metrics,
                                                      derive_seed(cfg.seed, "finetune-report"));
    }
    const std::string run_report_path = out_path(g, task_name + "_report.json");
    write_report_json(run_report_path, run_report);

    write_manifest(out_path(g, "manifest-finetune-" + task_name + ".json"), run_config_to_json(cfg),
                   cfg.seed, {{"checkpoint", ckpt}, {"history", hist}, {"report", run_report_path}});
    std::cerr << "best epoch " << history.best_epoch << " (val " << history.best_metric << ")\n";
    return 0;
}

int cmd_evaluate(const GlobalArgs& g, const RunConfig& cfg, const std::string& data_file,
                 const std::string& checkpoint, bool with_baselines) {
    PipelineData pd = load_pipeline_data(g, cfg, data_file, /*build_vocab=*/false);
    const std::string task_name = cfg.task == Task::mortality ? "mortality" : "personality";
    Model model(cfg.model, pd.vocab.size());
    const std::string ckpt = checkpoint.empty() ? out_path(g, task_name + ".ckpt") : checkpoint;
    load_checkpoint(ckpt, model, pd.vocab.hash());

    Cohort test = make_cohort(pd.dataset, pd.split.test, pd.vocab, cfg.tokenizer);
    EvalReport report;
    if (cfg.task == Task::mortality) {
        const Vec scores = score_mortality(model, test);
        const SubgroupLabels groups = subgroup_labels(select(pd.dataset.people, pd.split.test),
                                                      test.sequences, cfg.generator.end_date);
        report = evaluate_mortality_predictions(PuPredictions{scores, test.positive}, cfg.metrics,
                                                &groups, derive_seed(cfg.seed, "eval"));
    } else {
        const auto preds = predict_personality(model, test);
        report = evaluate_personality_predictions(test.items, preds, cfg.metrics,
                                                  derive_seed(cfg.seed, "eval"));
    }
    write_report_json(out_path(g, "eval_report.json"), report);
    write_report_csv(out_path(g, "eval_report.csv"), report);

    if (with_baselines && cfg.task == Task::mortality) {
        const auto train_people = select(pd.dataset.people, pd.split.train);
        const auto test_people = select(pd.dataset.people, pd.split.test);
        std::vector<std::uint8_t> train_labels, test_labels;
        for (int i : pd.split.train) train_labels.push_back(pd.dataset.outcomes[i].positive_label);
        for (int i : pd.split.test) test_labels.push_back(pd.dataset.outcomes[i].positive_label);

        BaselineConfig bcfg;
        bcfg.seed = derive_seed(cfg.seed, "baselines");
        bcfg.asymmetric_c = cfg.finetune.asymmetric_c;

        const auto lt_train = life_table_inputs(train_people, train_labels, cfg.generator.end_date);
        const auto lt_test = life_table_inputs(test_people, test_labels, cfg.generator.end_date);
        const auto cv_train = count_vector_inputs(train_people, train_labels, pd.vocab,
                                                  cfg.tokenizer, cfg.generator.end_date);
        const auto cv_test = count_vector_inputs(test_people, test_labels, pd.vocab, cfg.tokenizer,
                                                 cfg.generator.end_date);

        const FfnnModel life = train_life_table(lt_train, bcfg);
        const FfnnModel logreg = train_logreg(cv_train, bcfg);
        BaselineConfig fcfg = bcfg;
        fcfg.hidden = {32};
        const FfnnModel ffnn = train_ffnn(cv_train, fcfg);

        const auto emit = [&](const std::string& name, const FfnnModel& m,
                              const BaselineInputs& inputs) {
            const EvalReport r = evaluate_mortality_predictions(
                PuPredictions{baseline_scores(m, inputs.features), inputs.labels}, cfg.metrics,
                nullptr, derive_seed(cfg.seed, "eval-" + name), name);
            write_report_json(out_path(g, "eval_report_" + name + ".json"), r);
        };
        emit("life_table", life, lt_test);
        emit("logreg", logreg, cv_test);
        emit("ffnn", ffnn, cv_test);
    }
    std::cerr << "wrote " << out_path(g, "eval_report.json") << "\n";
    return 0;
}

int cmd_interpret(const GlobalArgs& g, const RunConfig& cfg, const std::string& data_file,
                  const std::string& checkpoint, const std::string& mode,
                  const std::string& concept_token, int n_sequences, int smoothgrad_samples,
                  real smoothgrad_sigma) {
    PipelineData pd = load_pipeline_data(g, cfg, data_file, /*build_vocab=*/false);
    Model model(cfg.model, pd.vocab.size());
    const std::string ckpt = checkpoint.empty() ? out_path(g, "mortality.ckpt") : checkpoint;
    load_checkpoint(ckpt, model, pd.vocab.hash());

    const auto test_seqs =
        encode_all(select(pd.dataset.people, pd.split.test), pd.vocab, cfg.tokenizer);
    const auto val_seqs =
        encode_all(select(pd.dataset.people, pd.split.validation), pd.vocab, cfg.tokenizer);

    if (mode == "saliency" || mode == "attention") {
        const int n = std::min<int>(n_sequences, static_cast<int>(test_seqs.size()));
        const std::string path = out_path(g, mode + ".csv");
        std::ofstream out(path, std::ios::binary);
        out << "person_id,position,token,score\n";
        for (int i = 0; i < n; ++i) {
            const Vec scores =
                mode == "saliency"
                    ? saliency(model, test_seqs[i], smoothgrad_samples, smoothgrad_sigma,
                               derive_seed(cfg.seed, "saliency", static_cast<std::uint64_t>(i)))
                    : attention_scores(model, test_seqs[i]);
            for (int p = 0; p < test_seqs[i].max_len && test_seqs[i].padding_mask[p]; ++p) {
                out << test_seqs[i].person_id << ',' << p << ','
                    << pd.vocab.token_of(test_seqs[i].token_ids[p]) << ',' << scores[p] << "\n";
            }
        }
        std::cerr << "wrote " << path << "\n";
        return 0;
    }
    if (mode == "tcav") {
        if (concept_token.empty()) {
            throw ValidationError("interpret --mode tcav requires --concept-token");
        }
        const int concept_id = pd.vocab.id_of(concept_token);
        if (concept_id == kUnk && concept_token != "[UNK]") {
            throw ValidationError("concept token '" + concept_token + "' is not in the vocabulary");
        }
        TcavConfig tcfg;
        tcfg.seed = derive_seed(cfg.seed, "tcav");
        const TcavResult res = tcav(
            model,
            [concept_id](const EncodedSequence& s) {
                for (int i = 0; i < s.max_len && s.padding_mask[i]; ++i) {
                    if (s.token_ids[i] == concept_id) return true;
                }
                return false;
            },
            val_seqs, test_seqs, tcfg);
        ordered_json j;
        j["concept_token"] = concept_token;
        j["sensitivity"] = res.sensitivity;
        j["p_value"] = res.p_value;
        j["u_statistic"] = res.u_stat;
        j["l2_strength"] = res.chosen_l2;
        const std::string path = out_path(g, "tcav.json");
        std::ofstream out(path, std::ios::binary);
        out << j.dump(2) << '\n';
        std::cerr << "wrote " << path << "\n";
        return 0;
    }
    throw ValidationError("unknown interpret mode '" + mode + "'");
}

Mat effective_embeddings(Model& model) {
    const Mat& raw = model.embedder().concept_emb->value;
    const Vec mean = concept_mean(raw);
    Mat out(raw.rows(), raw.cols());
    for (int r = 0; r < raw.rows(); ++r) {
        for (int c = 0; c < raw.cols(); ++c) out(r, c) = raw(r, c) - mean[c];
    }
    return out;
}

int cmd_analyze_space(const GlobalArgs& g, const RunConfig& cfg,
                      const std::vector<std::string>& checkpoints, const std::string& family_prefix,
                      int n_permutations, const std::string& correlation) {
    const MatrixCorrelation kind =
        correlation == "spearman" ? MatrixCorrelation::spearman : MatrixCorrelation::pearson;
    if (correlation != "pearson" && correlation != "spearman") {
        throw ValidationError("--correlation must be 'pearson' or 'spearman'");
    }
    if (checkpoints.empty()) throw ValidationError("analyze-space needs at least one --checkpoint");
    Vocabulary vocab = Vocabulary::load(out_path(g, "vocab.json"));

    std::vector<Mat> dists;
    std::vector<Mat> embs;
    for (const auto& path : checkpoints) {
        Model model(cfg.model, vocab.size());
        load_checkpoint(path, model, vocab.hash());
        embs.push_back(effective_embeddings(model));
        dists.push_back(cosine_distance_matrix(embs.back()));
    }

    ordered_json j;
    Vec pvals;
    std::vector<std::string> pair_names;
    const std::uint64_t seed = derive_seed(cfg.seed, "space");
    for (std::size_t a = 0; a < dists.size(); ++a) {
        for (std::size_t b = a + 1; b < dists.size(); ++b) {
            pvals.push_back(randomization_test(dists[a], dists[b], n_permutations,
                                               derive_seed(seed, a * 16 + b), kind));
            pair_names.push_back("model" + std::to_string(a + 1) + "/model" +
                                 std::to_string(b + 1));
        }
    }
    // Controls: random embeddings and a token-permuted copy of model 1.
    {
        Rng rng(derive_seed(seed, "random-control"));
        Mat random_emb(embs[0].rows(), embs[0].cols());
        for (std::size_t i = 0; i < random_emb.size(); ++i) random_emb.data()[i] = rng.normal();
        pvals.push_back(randomization_test(dists[0], cosine_distance_matrix(random_emb),
                                           n_permutations, derive_seed(seed, "rand-p"), kind));
        pair_names.push_back("model1/random");

        std::vector<int> perm(dists[0].rows());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
        rng.shuffle(perm);
        Mat permuted(dists[0].rows(), dists[0].cols());
        for (int r = 0; r < permuted.rows(); ++r) {
            for (int c = 0; c < permuted.cols(); ++c) permuted(r, c) = dists[0](perm[r], perm[c]);
        }
        pvals.push_back(randomization_test(dists[0], permuted, n_permutations,
                                           derive_seed(seed, "perm-p"), kind));
        pair_names.push_back("model1/permuted");
    }
    const auto rejected = benjamini_hochberg(pvals, 0.05);
    ordered_json tests = ordered_json::array();
    for (std::size_t i = 0; i < pvals.size(); ++i) {
        tests.push_back({{"pair", pair_names[i]},
                         {"p_value", pvals[i]},
                         {"rejected_at_q05", static_cast<bool>(rejected[i])}});
    }
    j["randomization_tests"] = std::move(tests);

    const HubnessResult hub = hubness(embs[0], 5);
    j["hubness"] = {{"k", 5},
                    {"max_in_degree", hub.max_in_degree},
                    {"max_fraction", hub.max_fraction}};

    // Ordered token family (numeric suffix order) for the ordinal check.
    std::vector<std::pair<long, int>> family;
    for (int v = 0; v < vocab.size(); ++v) {
        const std::string& t = vocab.token_of(v);
        if (t.rfind(family_prefix, 0) == 0) {
            family.emplace_back(std::stol(t.substr(family_prefix.size())), v);
        }
    }
    std::sort(family.begin(), family.end());
    if (family.size() >= 3) {
        std::vector<int> ids;
        for (const auto& [lvl, id] : family) ids.push_back(id);
        j["ordinal"] = {{"family_prefix", family_prefix},
                        {"n", ids.size()},
                        {"score", ordinal_structure_score(embs[0], ids)}};
        ordered_json nb = ordered_json::array();
        const int mid = static_cast<int>(ids.size()) / 2;
        for (const auto& [id, dist] : neighbor_query(embs[0], ids[mid], 3)) {
            nb.push_back({{"token", vocab.token_of(id)}, {"cosine_distance", dist}});
        }
        j["neighbors_of"] = vocab.token_of(ids[mid]);
        j["neighbors"] = std::move(nb);
    }

    const std::string path = out_path(g, "space_analysis.json");
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
    std::cerr << "wrote " << path << "\n";
    return 0;
}

int cmd_export_embeddings(const GlobalArgs& g, const RunConfig& cfg, const std::string& checkpoint,
                          const std::string& output) {
    Vocabulary vocab = Vocabulary::load(out_path(g, "vocab.json"));
    Model model(cfg.model, vocab.size());
    const std::string ckpt = checkpoint.empty() ? out_path(g, "base.ckpt") : checkpoint;
    load_checkpoint(ckpt, model, vocab.hash());
    const Mat emb = effective_embeddings(model);

    const std::string path = output.empty() ? out_path(g, "embeddings.csv") : output;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    // exactly |vocab| rows, d+1 columns, no header
    char buf[64];
    for (int v = 0; v < vocab.size(); ++v) {
        out << vocab.token_of(v);
        for (int c = 0; c < emb.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), ",%.9g", emb(v, c));
            out << buf;
        }
        out << '\n';
    }
    std::cerr << "wrote " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"life-sequence representation learning pipeline"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "JSON run configuration");
    app.add_option("--out", g.out_dir, "output directory (default: out)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "override the run seed");

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic registry");
    std::string data_file;

    auto* pre = app.add_subcommand("pretrain", "MLM + SOP pretraining");
    pre->add_option("--data", data_file, "people.jsonl path (default: OUT/people.jsonl)");

    auto* fin = app.add_subcommand("finetune", "task finetuning (config `task` selects which)");
    std::string checkpoint;
    fin->add_option("--data", data_file);
    fin->add_option("--checkpoint", checkpoint, "base checkpoint (default: OUT/base.ckpt)");

    auto* eva = app.add_subcommand("evaluate", "test-set evaluation report");
    bool with_baselines = false;
    eva->add_option("--data", data_file);
    eva->add_option("--checkpoint", checkpoint, "task checkpoint (default: OUT/<task>.ckpt)");
    eva->add_flag("--baselines", with_baselines, "also train and evaluate the baseline models");

    auto* itp = app.add_subcommand("interpret", "saliency / attention / TCAV");
    std::string mode = "saliency";
    std::string concept_token;
    int n_sequences = 10;
    int sg_samples = 8;
    double sg_sigma = 0.05;
    itp->add_option("--data", data_file);
    itp->add_option("--checkpoint", checkpoint, "task checkpoint (default: OUT/mortality.ckpt)");
    itp->add_option("--mode", mode, "saliency | attention | tcav");
    itp->add_option("--concept-token", concept_token, "token defining the TCAV concept");
    itp->add_option("--sequences", n_sequences, "sequences to export (saliency/attention)");
    itp->add_option("--smoothgrad-samples", sg_samples);
    itp->add_option("--smoothgrad-sigma", sg_sigma);

    auto* spc = app.add_subcommand("analyze-space", "concept-space robustness analysis");
    std::vector<std::string> checkpoints;
    std::string family_prefix = "INC_";
    int n_permutations = 1000;
    std::string correlation = "pearson";
    spc->add_option("--checkpoint", checkpoints, "checkpoints to compare (repeatable)");
    spc->add_option("--family-prefix", family_prefix, "ordered token family prefix");
    spc->add_option("--permutations", n_permutations);
    spc->add_option("--correlation", correlation, "pearson | spearman");

    auto* exp = app.add_subcommand("export-embeddings", "write concept embeddings as CSV");
    std::string output;
    exp->add_option("--checkpoint", checkpoint, "checkpoint (default: OUT/base.ckpt)");
    exp->add_option("--output", output, "CSV path (default: OUT/embeddings.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the parse error
        return code == 0 ? 0 : 1;      // bad flags/subcommands are validation errors
    }

    try {
        if (seed_opt->count() > 0) g.seed_override = seed_value;
        const RunConfig cfg = load_config(g);
        if (gen->parsed()) return cmd_gen_data(g, cfg);
        if (pre->parsed()) return cmd_pretrain(g, cfg, data_file);
        if (fin->parsed()) return cmd_finetune(g, cfg, data_file, checkpoint);
        if (eva->parsed()) return cmd_evaluate(g, cfg, data_file, checkpoint, with_baselines);
        if (itp->parsed()) {
            return cmd_interpret(g, cfg, data_file, checkpoint, mode, concept_token, n_sequences,
                                 sg_samples, sg_sigma);
        }
        if (spc->parsed()) {
            return cmd_analyze_space(g, cfg, checkpoints, family_prefix, n_permutations,
                                     correlation);
        }
        if (exp->parsed()) return cmd_export_embeddings(g, cfg, checkpoint, output);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
}
