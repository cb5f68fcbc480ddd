#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "lifeseq/checkpoint.hpp"
#include "lifeseq/config.hpp"

using namespace lifeseq;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("checkpoint round trip is byte-identical and forward-preserving") {
    auto w = test::tiny_world(10, 501, 48);
    Model model(test::tiny_model_config(0, 16, 2), w.vocab.size());
    test::randomize_params(model, 3, 0.4);

    const std::string p1 = "/tmp/lifeseq_a.ckpt";
    const std::string p2 = "/tmp/lifeseq_b.ckpt";
    save_checkpoint(p1, model, w.vocab.hash(), 17);

    // forward-equality oracle: the pre-save forward pass
    const Vec mean = concept_mean(model.embedder().concept_emb->value);
    const auto before = model.forward_sequence(w.seqs[0], model.eval_feature_maps(), mean);

    Model loaded(test::tiny_model_config(0, 16, 2), w.vocab.size());
    const CheckpointInfo info = load_checkpoint(p1, loaded, w.vocab.hash());
    CHECK(info.step == 17);

    const Vec mean2 = concept_mean(loaded.embedder().concept_emb->value);
    const auto after = loaded.forward_sequence(w.seqs[0], loaded.eval_feature_maps(), mean2);
    CHECK(before.h == after.h);  // bit-equal forward pass

    // save(load(file)) == file
    save_checkpoint(p2, loaded, w.vocab.hash(), 17);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("checkpoint refuses corrupt files and mismatched hashes") {
    auto w = test::tiny_world(8, 503, 48);
    Model model(test::tiny_model_config(0, 16, 1), w.vocab.size());
    const std::string path = "/tmp/lifeseq_c.ckpt";
    save_checkpoint(path, model, w.vocab.hash(), 1);

    // truncated file -> structured corruption error
    const std::string whole = slurp(path);
    {
        std::ofstream out("/tmp/lifeseq_trunc.ckpt", std::ios::binary);
        out.write(whole.data(), static_cast<std::streamsize>(whole.size() / 2));
    }
    Model m2(test::tiny_model_config(0, 16, 1), w.vocab.size());
    CHECK_THROWS_AS(load_checkpoint("/tmp/lifeseq_trunc.ckpt", m2, w.vocab.hash()), IoError);

    // vocabulary hash mismatch
    CHECK_THROWS_WITH_AS(load_checkpoint(path, m2, w.vocab.hash() + 1),
                         doctest::Contains("hash mismatch"), ValidationError);

    // model config hash mismatch
    Model other(test::tiny_model_config(0, 16, 2), w.vocab.size());
    CHECK_THROWS_WITH_AS(load_checkpoint(path, other, w.vocab.hash()),
                         doctest::Contains("config hash"), ValidationError);

    // not a checkpoint at all
    {
        std::ofstream out("/tmp/lifeseq_noise.ckpt", std::ios::binary);
        out << "this is not a checkpoint";
    }
    CHECK_THROWS_AS(load_checkpoint("/tmp/lifeseq_noise.ckpt", m2, w.vocab.hash()), IoError);
}

TEST_CASE("run config: defaults, overrides, seed propagation") {
    const RunConfig d = parse_run_config("{}");
    CHECK(d.generator.n_income_levels == 100);
    CHECK(d.tokenizer.max_len == 256);
    CHECK(d.model.enc.d == 64);
    CHECK(d.pretrain.mask_fraction == doctest::Approx(0.30));
    CHECK(d.finetune.decoder_lr == doctest::Approx(0.01));
    CHECK(d.metrics.bootstrap_resamples == 1000);

    const RunConfig c = parse_run_config(R"({
        "seed": 5,
        "generator": {"population_size": 77, "hazard_coefficients": {"age": 2.0}},
        "tokenizer": {"max_len": 128},
        "model": {"hidden": 32, "layers": 3},
        "task": "personality"
    })");
    CHECK(c.generator.population_size == 77);
    CHECK(c.generator.hazard_coefficients.at("age") == 2.0);
    CHECK(c.model.enc.d == 32);
    CHECK(c.model.enc.n_layers == 3);
    CHECK(c.model.max_len == 128);  // follows the tokenizer
    CHECK(c.task == Task::personality);
    // module seeds all derive from the run seed
    CHECK(c.generator.seed == derive_seed(5, "generator"));
    CHECK(c.pretrain.seed == derive_seed(5, "pretrain"));

    // resolved JSON re-parses to the same values
    const RunConfig back = parse_run_config(run_config_to_json(c));
    CHECK(back.generator.population_size == 77);
    CHECK(back.model.enc.n_layers == 3);
    CHECK(back.task == Task::personality);
}

TEST_CASE("run config rejects unknown keys anywhere in the tree") {
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"sede": 3})"), doctest::Contains("sede"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"generator": {"population": 10}})"),
                         doctest::Contains("generator.population"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_run_config(R"({"pretrain": {"mask_frac": 0.3}})"),
                         doctest::Contains("pretrain.mask_frac"), ValidationError);
    CHECK_THROWS_AS(parse_run_config(R"({"schema_version": 99})"), ValidationError);
    CHECK_THROWS_AS(parse_run_config("not json"), ValidationError);
}
