#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "steersum/checkpoint.hpp"
#include "steersum/config.hpp"
#include "steersum/manifest.hpp"

using namespace steersum;

TEST_CASE("config parse -> serialize -> parse is the identity") {
    RunConfig a = RunConfig::defaults();
    a.set("lambda", "12.5");
    a.set("training_steps", "321");
    a.set("schedule", "sqrt");

    const std::string text = a.serialize();
    std::istringstream in(text);
    const RunConfig b = RunConfig::parse(in);
    REQUIRE(a == b);
    REQUIRE(b.serialize() == text);
    REQUIRE(a.hash() == b.hash());
}

TEST_CASE("config parsing handles comments and whitespace") {
    std::istringstream in(
        "# a comment\n"
        "  lambda = 7.0  \n"
        "\n"
        "guidance_on=true # trailing comment\n");
    const RunConfig c = RunConfig::parse(in);
    CHECK(c.get_real("lambda") == 7.0);
    CHECK(c.get_bool("guidance_on"));
}

TEST_CASE("unknown keys and malformed values are config errors") {
    RunConfig c;
    CHECK_THROWS_AS(c.set("no_such_key", "1"), ConfigError);
    CHECK_THROWS_AS(c.set("lambda", "abc"), ConfigError);
    CHECK_THROWS_AS(c.set("guidance_on", "yes"), ConfigError);
    std::istringstream in("lambda\n");
    CHECK_THROWS_AS(RunConfig::parse(in), ParseError);
}

TEST_CASE("presets: toy defaults and the full-scale profile") {
    const RunConfig toy = RunConfig::preset("toy");
    CHECK(toy.get_int("diffusion_steps") == 100);
    CHECK(toy.get_real("k") == 5.0);
    CHECK(toy.get_real("top_p") == 0.95);
    CHECK(toy.get_real("self_cond_prob") == 0.5);
    CHECK(toy.get_int("max_len") == 64);
    CHECK(toy.get_int("vocab_size") == 512);

    const RunConfig paper = RunConfig::preset("paper");
    CHECK(paper.get_int("diffusion_steps") == 1000);
    CHECK(paper.get_int("max_target_length") == 120);
    CHECK(paper.get_real("learning_rate") == 3e-5);
    CHECK(paper.get_int("training_steps") == 20000);
    CHECK(paper.get_real("lambda") == 4000.0);

    CHECK_THROWS_AS(RunConfig::preset("huge"), ConfigError);
}

TEST_CASE("config maps onto train and decode structs") {
    RunConfig c = RunConfig::defaults();
    c.set("diffusion_steps", "50");
    c.set("lambda", "8");
    const TrainConfig t = c.train_config();
    CHECK(t.diffusion_steps == 50);
    const DecodeConfig d = c.decode_config();
    CHECK(d.T == 50);
    CHECK(d.lambda == 8.0);
    CHECK(d.top_p == 0.95);
    CHECK(d.k == 5.0);
}

TEST_CASE("SIMPLEX_STEER_SEED overrides the configured seed") {
    unsetenv("SIMPLEX_STEER_SEED");
    CHECK(resolve_seed(42) == 42);
    setenv("SIMPLEX_STEER_SEED", "777", 1);
    CHECK(resolve_seed(42) == 777);
    setenv("SIMPLEX_STEER_SEED", "bogus", 1);
    CHECK_THROWS_AS(resolve_seed(42), ConfigError);
    unsetenv("SIMPLEX_STEER_SEED");
}

TEST_CASE("manifest round-trips through JSON") {
    RunManifest m;
    m.command = "summarize";
    m.argv = {"summarize", "--seed", "7"};
    m.seed = 7;
    m.config_hash = "abc";
    m.input_hashes["in.jsonl"] = "h1";
    m.output_hashes["out.jsonl"] = "h2";

    const std::string path = "test_manifest_tmp.json";
    m.save(path);
    const RunManifest back = RunManifest::load(path);
    std::remove(path.c_str());

    CHECK(back.command == m.command);
    CHECK(back.argv == m.argv);
    CHECK(back.seed == m.seed);
    CHECK(back.config_hash == m.config_hash);
    CHECK(back.input_hashes == m.input_hashes);
    CHECK(back.output_hashes == m.output_hashes);
}

TEST_CASE("denoiser checkpoints round-trip and refuse the wrong vocabulary") {
    const Vocabulary vocab = test::make_vocab(12);
    TrainConfig cfg;
    cfg.max_len = 16;
    cfg.width = 16;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.diffusion_steps = 8;
    std::mt19937_64 rng(3);
    DenoiserModel<float> model(vocab.size(), cfg, rng);

    const std::string path = "test_denoiser_tmp.bin";
    save_denoiser(model, vocab, path);
    DenoiserModel<float> back = load_denoiser<float>(path, vocab);

    auto a = model.params();
    auto b = back.params();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i]->w.data == b[i]->w.data);
    CHECK(back.config().width == cfg.width);

    // prediction parity after reload
    std::mt19937_64 data_rng(4);
    const SimplexSequence s = test::random_sequence(data_rng, 5, static_cast<std::size_t>(vocab.size()), 5.0);
    CHECK(model.predict(s, 3).logits.data == back.predict(s, 3).logits.data);

    const Vocabulary other = test::make_vocab(13);
    CHECK_THROWS_AS(load_denoiser<float>(path, other), ConfigError);

    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("classifier checkpoints round-trip and refuse the wrong vocabulary") {
    const Vocabulary vocab = test::make_vocab(12);
    std::mt19937_64 rng(9);
    ToyStanceClassifier clf(vocab, 8, rng);
    std::normal_distribution<double> dist(0.0, 0.5);
    for (auto& v : clf.head_weight().data) v = dist(rng);
    clf.set_heldout_accuracy(0.97);

    const std::string path = "test_classifier_tmp.bin";
    save_classifier(clf, vocab, path);
    const ToyStanceClassifier back = load_classifier(path, vocab);

    CHECK(back.embedding().data == clf.embedding().data);
    CHECK(back.head_weight().data == clf.head_weight().data);
    CHECK(back.head_bias().data == clf.head_bias().data);
    CHECK(back.heldout_accuracy() == 0.97);
    CHECK(back.classify({4, 5, 6}) == clf.classify({4, 5, 6}));

    const Vocabulary other = test::make_vocab(5);
    CHECK_THROWS_AS(load_classifier(path, other), ConfigError);

    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}
