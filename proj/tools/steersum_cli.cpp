// steersum: stance-preserving summarization with a simplex diffusion model
// and plug-in classifier guidance. Subcommands cover the full pipeline:
// synthetic data, denoiser/classifier training, guided decoding, metrics,
// sweeps and ablations. Every run writes a manifest sufficient to reproduce
// its outputs bit-identically.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "steersum/checkpoint.hpp"
#include "steersum/config.hpp"
#include "steersum/corpus.hpp"
#include "steersum/decoder.hpp"
#include "steersum/denoiser.hpp"
#include "steersum/guidance.hpp"
#include "steersum/manifest.hpp"
#include "steersum/metrics.hpp"

namespace fs = std::filesystem;
using namespace steersum;
using nlohmann::json;

namespace {

struct ManifestBuilder {
    RunManifest m;

    explicit ManifestBuilder(std::string command) { m.command = std::move(command); }

    void arg(const std::string& a) { m.argv.push_back(a); }
    void arg(const std::string& flag, const std::string& value) {
        m.argv.push_back(flag);
        m.argv.push_back(value);
    }
    void input(const std::string& path) { m.input_hashes[path] = hash_file(path); }
    // a checkpoint is the weight blob plus its sidecar
    void checkpoint_input(const std::string& path) {
        input(path);
        input(path + ".json");
    }
    void output(const std::string& path) { m.output_hashes[path] = hash_file(path); }

    void write(const std::string& path) { m.save(path); }
};

RunConfig load_config(const std::string& config_path, const std::string& preset) {
    RunConfig cfg = preset.empty() ? RunConfig::defaults() : RunConfig::preset(preset);
    if (!config_path.empty()) {
        const RunConfig file = RunConfig::parse_file(config_path);
        std::istringstream merged(file.serialize());
        std::string line;
        while (std::getline(merged, line)) {
            const auto eq = line.find('=');
            cfg.set(line.substr(0, eq), line.substr(eq + 1));
        }
    }
    return cfg;
}

std::vector<std::vector<int>> load_summaries_file(const std::string& path, const Vocabulary& vocab,
                                                  const std::vector<SummarizationExample>& corpus) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open summaries file: " + path);
    std::map<std::string, std::vector<int>> by_id;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        by_id[j.at("id").get<std::string>()] = tokenize(j.at("summary").get<std::string>(), vocab);
    }
    std::vector<std::vector<int>> out;
    out.reserve(corpus.size());
    for (const auto& ex : corpus) {
        const auto it = by_id.find(ex.id);
        if (it == by_id.end()) throw DataError("summaries file is missing id '" + ex.id + "'");
        out.push_back(it->second);
    }
    return out;
}

void write_summaries_file(const std::string& path, const std::vector<SummarizationExample>& corpus,
                          const std::vector<std::vector<int>>& summaries, const Vocabulary& vocab) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write summaries: " + path);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        out << json{{"id", corpus[i].id}, {"summary", detokenize(summaries[i], vocab)}}.dump() << "\n";
    }
}

EvalReport evaluate_pairs(const std::vector<SummarizationExample>& corpus,
                          const std::vector<std::vector<int>>& summaries, const StanceClassifier& clf) {
    std::vector<std::vector<int>> docs, refs;
    bool any_ref = false;
    for (const auto& ex : corpus) {
        docs.push_back(ex.document);
        refs.push_back(ex.summary);
        if (!ex.summary.empty()) any_ref = true;
    }
    return build_report(docs, summaries, any_ref ? &refs : nullptr, clf);
}

// ---- subcommand bodies -------------------------------------------------

int run_gen_synthetic(int n, int vocab_size, std::uint64_t seed, const std::string& out_dir) {
    seed = resolve_seed(seed);
    fs::create_directories(out_dir);
    const SyntheticCorpus syn = gen_synthetic(n, vocab_size, seed);
    const std::string corpus_path = out_dir + "/corpus.jsonl";
    const std::string vocab_path = out_dir + "/vocab.json";
    save_corpus(syn.examples, syn.vocab, corpus_path);
    syn.vocab.save(vocab_path);

    ManifestBuilder mb("gen-synthetic");
    mb.arg("gen-synthetic");
    mb.arg("--n", std::to_string(n));
    mb.arg("--vocab-size", std::to_string(vocab_size));
    mb.arg("--seed", std::to_string(seed));
    mb.arg("--out-dir", out_dir);
    mb.m.seed = seed;
    mb.output(corpus_path);
    mb.output(vocab_path);
    mb.write(out_dir + "/manifest.json");
    std::cout << "wrote " << corpus_path << " (" << syn.examples.size() << " examples), " << vocab_path << "\n";
    return 0;
}

int run_train_denoiser(const std::string& corpus_path, const std::string& vocab_path, const std::string& out_path,
                       const std::string& config_path, const std::string& preset, std::uint64_t seed,
                       bool seed_given, const std::string& metrics_path) {
    RunConfig cfg = load_config(config_path, preset);
    if (seed_given) cfg.set("seed", std::to_string(seed));
    cfg.set("seed", std::to_string(resolve_seed(cfg.get_uint("seed"))));

    const Vocabulary vocab = Vocabulary::load(vocab_path);
    const auto corpus = load_corpus(corpus_path, vocab);
    TrainConfig tc = cfg.train_config();

    std::mt19937_64 rng(tc.seed);
    TrainLog log;
    DenoiserModel<float> model = train_denoiser<float>(corpus, tc, vocab, rng, &log);
    save_denoiser(model, vocab, out_path);

    std::string metrics = metrics_path.empty() ? out_path + ".metrics.csv" : metrics_path;
    {
        std::ofstream m(metrics);
        m << "step,loss\n";
        for (const auto& e : log) m << e.step << "," << RunConfig::format_real(e.loss) << "\n";
    }

    ManifestBuilder mb("train-denoiser");
    mb.arg("train-denoiser");
    mb.arg("--corpus", corpus_path);
    mb.arg("--vocab", vocab_path);
    mb.arg("--out", out_path);
    if (!config_path.empty()) mb.arg("--config", config_path);
    if (!preset.empty()) mb.arg("--preset", preset);
    mb.arg("--seed", std::to_string(tc.seed));
    mb.arg("--metrics", metrics);
    mb.m.seed = tc.seed;
    mb.m.config_hash = cfg.hash();
    if (!config_path.empty()) mb.input(config_path);
    mb.input(corpus_path);
    mb.input(vocab_path);
    mb.output(out_path);
    mb.output(out_path + ".json");
    mb.output(metrics);
    mb.write(out_path + ".manifest.json");

    const double first = log.empty() ? 0.0 : log.front().loss;
    const double last = log.empty() ? 0.0 : log.back().loss;
    std::cout << "trained " << tc.training_steps << " steps, loss " << first << " -> " << last << ", wrote "
              << out_path << "\n";
    return 0;
}

int run_train_classifier(const std::string& corpus_path, const std::string& vocab_path, const std::string& out_path,
                         int epochs, double lr, int dim, std::uint64_t seed, const std::string& subset) {
    seed = resolve_seed(seed);
    const Vocabulary vocab = Vocabulary::load(vocab_path);
    const auto corpus = load_corpus(corpus_path, vocab);
    auto labeled = classifier_corpus(corpus);
    if (subset == "first-half")
        labeled.erase(labeled.begin() + static_cast<std::ptrdiff_t>(labeled.size() / 2), labeled.end());
    else if (subset == "second-half")
        labeled.erase(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(labeled.size() / 2));
    else if (subset != "all")
        throw ConfigError("--subset must be all, first-half or second-half");
    if (labeled.empty()) throw DataError("no labeled examples in corpus");

    std::mt19937_64 rng(seed);
    ToyStanceClassifier::TrainStats stats;
    ToyStanceClassifier clf = train_toy_classifier(labeled, vocab, epochs, lr, rng, dim, &stats);
    save_classifier(clf, vocab, out_path);

    ManifestBuilder mb("train-classifier");
    mb.arg("train-classifier");
    mb.arg("--corpus", corpus_path);
    mb.arg("--vocab", vocab_path);
    mb.arg("--out", out_path);
    mb.arg("--epochs", std::to_string(epochs));
    mb.arg("--lr", RunConfig::format_real(lr));
    mb.arg("--dim", std::to_string(dim));
    mb.arg("--seed", std::to_string(seed));
    mb.arg("--subset", subset);
    mb.m.seed = seed;
    mb.input(corpus_path);
    mb.input(vocab_path);
    mb.output(out_path);
    mb.output(out_path + ".json");
    mb.write(out_path + ".manifest.json");

    std::cout << "classifier held-out accuracy " << stats.heldout_accuracy << ", wrote " << out_path << "\n";
    return 0;
}

struct SummarizeArgs {
    std::string model_path, vocab_path, classifier_path, corpus_path, doc_text, out_path, trace_path;
    std::string config_path, preset;
    double lambda = -1.0;
    int steps = -1;
    double top_p = -1.0;
    int max_target = -1;
    bool no_guidance = false;
    bool no_self_cond = false;
    bool target_from_gold = false;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

int run_summarize(const SummarizeArgs& a) {
    RunConfig cfg = load_config(a.config_path, a.preset);
    if (a.lambda >= 0.0) cfg.set("lambda", RunConfig::format_real(a.lambda));
    if (a.steps > 0) cfg.set("diffusion_steps", std::to_string(a.steps));
    if (a.top_p > 0.0) cfg.set("top_p", RunConfig::format_real(a.top_p));
    if (a.max_target > 0) cfg.set("max_target_length", std::to_string(a.max_target));
    if (a.no_guidance) cfg.set("guidance_on", "false");
    if (a.no_self_cond) cfg.set("self_cond_on", "false");
    if (a.target_from_gold) cfg.set("target_from_gold", "true");
    if (a.seed_given) cfg.set("seed", std::to_string(a.seed));
    cfg.set("seed", std::to_string(resolve_seed(cfg.get_uint("seed"))));

    const Vocabulary vocab = Vocabulary::load(a.vocab_path);
    DenoiserModel<float> model = load_denoiser<float>(a.model_path, vocab);
    std::optional<ToyStanceClassifier> clf;
    if (!a.classifier_path.empty()) clf = load_classifier(a.classifier_path, vocab);

    DecodeConfig dc = cfg.decode_config();
    if (dc.guidance_on && !clf) throw ConfigError("guided decoding requires --classifier (or pass --no-guidance)");

    std::vector<SummarizationExample> docs;
    if (!a.corpus_path.empty()) {
        docs = load_corpus(a.corpus_path, vocab);
    } else if (!a.doc_text.empty()) {
        SummarizationExample ex;
        ex.id = "doc0";
        ex.document = tokenize(a.doc_text, vocab);
        if (ex.document.empty()) throw DataError("--doc text tokenized to nothing");
        docs.push_back(std::move(ex));
    } else {
        throw ConfigError("summarize needs --corpus or --doc");
    }

    std::vector<std::vector<int>> summaries;
    DecodeTrace first_trace;
    if (!a.trace_path.empty()) {
        // traced decodes run sequentially so the trace lines stay ordered
        summaries.resize(docs.size());
        std::ofstream trace_out(a.trace_path);
        if (!trace_out) throw DataError("cannot write trace: " + a.trace_path);
        for (std::size_t i = 0; i < docs.size(); ++i) {
            DecodeConfig per = dc;
            per.trace_enabled = true;
            per.seed = document_seed(dc.seed, i);
            std::optional<Stance> gold;
            if (docs[i].stance_label) gold = stance_from_int(*docs[i].stance_label);
            DecodeResult r = decode(docs[i].document, model, clf ? &*clf : nullptr, vocab, per, gold);
            r.trace.to_jsonl(trace_out);
            summaries[i] = std::move(r.summary);
        }
    } else {
        summaries = decode_corpus(docs, model, clf ? &*clf : nullptr, vocab, dc);
    }
    write_summaries_file(a.out_path, docs, summaries, vocab);

    ManifestBuilder mb("summarize");
    mb.arg("summarize");
    mb.arg("--model", a.model_path);
    mb.arg("--vocab", a.vocab_path);
    if (!a.classifier_path.empty()) mb.arg("--classifier", a.classifier_path);
    if (!a.corpus_path.empty()) mb.arg("--corpus", a.corpus_path);
    if (!a.doc_text.empty()) mb.arg("--doc", a.doc_text);
    mb.arg("--out", a.out_path);
    if (!a.config_path.empty()) mb.arg("--config", a.config_path);
    if (!a.preset.empty()) mb.arg("--preset", a.preset);
    mb.arg("--lambda", cfg.raw("lambda"));
    mb.arg("--steps", cfg.raw("diffusion_steps"));
    mb.arg("--top-p", cfg.raw("top_p"));
    mb.arg("--max-target-length", cfg.raw("max_target_length"));
    if (!cfg.get_bool("guidance_on")) mb.arg("--no-guidance");
    if (!cfg.get_bool("self_cond_on")) mb.arg("--no-self-cond");
    if (cfg.get_bool("target_from_gold")) mb.arg("--target-from-gold");
    mb.arg("--seed", cfg.raw("seed"));
    if (!a.trace_path.empty()) mb.arg("--trace", a.trace_path);
    mb.m.seed = cfg.get_uint("seed");
    mb.m.config_hash = cfg.hash();
    if (!a.config_path.empty()) mb.input(a.config_path);
    mb.checkpoint_input(a.model_path);
    mb.input(a.vocab_path);
    if (!a.classifier_path.empty()) mb.checkpoint_input(a.classifier_path);
    if (!a.corpus_path.empty()) mb.input(a.corpus_path);
    mb.output(a.out_path);
    if (!a.trace_path.empty()) mb.output(a.trace_path);
    mb.write(a.out_path + ".manifest.json");

    std::cout << "wrote " << summaries.size() << " summaries to " << a.out_path << "\n";
    return 0;
}

int run_evaluate(const std::string& corpus_path, const std::string& summaries_path, const std::string& vocab_path,
                 const std::string& classifier_path, const std::string& out_path, const std::string& drift_csv) {
    const Vocabulary vocab = Vocabulary::load(vocab_path);
    const auto corpus = load_corpus(corpus_path, vocab);
    const ToyStanceClassifier clf = load_classifier(classifier_path, vocab);
    const auto summaries = load_summaries_file(summaries_path, vocab, corpus);

    const EvalReport report = evaluate_pairs(corpus, summaries, clf);
    {
        std::ofstream out(out_path);
        if (!out) throw DataError("cannot write report: " + out_path);
        out << report.to_json().dump(2) << "\n";
    }
    if (!drift_csv.empty()) {
        std::ofstream out(drift_csv);
        if (!out) throw DataError("cannot write drift csv: " + drift_csv);
        report.drift_csv(out);
    }

    ManifestBuilder mb("evaluate");
    mb.arg("evaluate");
    mb.arg("--corpus", corpus_path);
    mb.arg("--summaries", summaries_path);
    mb.arg("--vocab", vocab_path);
    mb.arg("--classifier", classifier_path);
    mb.arg("--out", out_path);
    if (!drift_csv.empty()) mb.arg("--drift-csv", drift_csv);
    mb.input(corpus_path);
    mb.input(summaries_path);
    mb.input(vocab_path);
    mb.checkpoint_input(classifier_path);
    mb.output(out_path);
    if (!drift_csv.empty()) mb.output(drift_csv);
    mb.write(out_path + ".manifest.json");

    std::cout << "suc " << report.suc << " dist " << report.dist << " -> " << out_path << "\n";
    return 0;
}

int run_sweep(const std::string& grid_path, const std::string& corpus_path, const std::string& vocab_path,
              const std::string& model_path, const std::string& classifier_path,
              const std::string& eval_classifier_path, const std::string& out_path, const std::string& config_path,
              const std::string& preset, std::uint64_t seed, bool seed_given) {
    RunConfig cfg = load_config(config_path, preset);
    if (seed_given) cfg.set("seed", std::to_string(seed));
    cfg.set("seed", std::to_string(resolve_seed(cfg.get_uint("seed"))));

    const Vocabulary vocab = Vocabulary::load(vocab_path);
    const auto corpus = load_corpus(corpus_path, vocab);
    DenoiserModel<float> model = load_denoiser<float>(model_path, vocab);
    const ToyStanceClassifier guide_clf = load_classifier(classifier_path, vocab);
    const ToyStanceClassifier eval_clf =
        eval_classifier_path.empty() ? guide_clf : load_classifier(eval_classifier_path, vocab);

    std::ifstream gin(grid_path);
    if (!gin) throw DataError("cannot open grid file: " + grid_path);
    json gj;
    try {
        gin >> gj;
    } catch (const json::exception& e) {
        throw ParseError("grid file " + grid_path + ": " + e.what());
    }
    SweepGrid grid;
    if (gj.contains("lambda")) grid.lambdas = gj["lambda"].get<std::vector<double>>();
    if (gj.contains("T")) grid.Ts = gj["T"].get<std::vector<int>>();
    if (gj.contains("top_p")) grid.top_ps = gj["top_p"].get<std::vector<double>>();

    DecodeConfig base = cfg.decode_config();
    base.guidance_on = true;
    const auto rows = sweep_decode(corpus, model, guide_clf, eval_clf, vocab, grid, base);
    {
        std::ofstream out(out_path);
        if (!out) throw DataError("cannot write sweep table: " + out_path);
        out << "lambda,T,top_p,suc,dist\n";
        for (const auto& r : rows)
            out << RunConfig::format_real(r.setting.lambda) << "," << r.setting.T << ","
                << RunConfig::format_real(r.setting.top_p) << "," << RunConfig::format_real(r.suc) << ","
                << RunConfig::format_real(r.dist) << "\n";
    }

    ManifestBuilder mb("sweep");
    mb.arg("sweep");
    mb.arg("--grid", grid_path);
    mb.arg("--corpus", corpus_path);
    mb.arg("--vocab", vocab_path);
    mb.arg("--model", model_path);
    mb.arg("--classifier", classifier_path);
    if (!eval_classifier_path.empty()) mb.arg("--eval-classifier", eval_classifier_path);
    mb.arg("--out", out_path);
    if (!config_path.empty()) mb.arg("--config", config_path);
    if (!preset.empty()) mb.arg("--preset", preset);
    mb.arg("--seed", cfg.raw("seed"));
    mb.m.seed = cfg.get_uint("seed");
    mb.m.config_hash = cfg.hash();
    if (!config_path.empty()) mb.input(config_path);
    mb.input(grid_path);
    mb.input(corpus_path);
    mb.input(vocab_path);
    mb.checkpoint_input(model_path);
    mb.checkpoint_input(classifier_path);
    if (!eval_classifier_path.empty()) mb.checkpoint_input(eval_classifier_path);
    mb.output(out_path);
    mb.write(out_path + ".manifest.json");

    std::cout << "wrote " << rows.size() << " sweep rows to " << out_path << "\n";
    return 0;
}

int run_ablate(const std::string& corpus_path, const std::string& vocab_path, const std::string& model_path,
               const std::string& classifier_path, const std::string& eval_classifier_path,
               const std::string& out_path, const std::string& config_path, const std::string& preset,
               std::uint64_t seed, bool seed_given) {
    RunConfig cfg = load_config(config_path, preset);
    if (seed_given) cfg.set("seed", std::to_string(seed));
    cfg.set("seed", std::to_string(resolve_seed(cfg.get_uint("seed"))));

    const Vocabulary vocab = Vocabulary::load(vocab_path);
    const auto corpus = load_corpus(corpus_path, vocab);
    DenoiserModel<float> model = load_denoiser<float>(model_path, vocab);
    const ToyStanceClassifier guide_clf = load_classifier(classifier_path, vocab);
    const ToyStanceClassifier eval_clf =
        eval_classifier_path.empty() ? guide_clf : load_classifier(eval_classifier_path, vocab);

    struct Row {
        std::string name;
        bool guidance;
        bool self_cond;
    };
    const std::vector<Row> variants = {
        {"full", true, true}, {"w/o MC", false, true}, {"w/o SC", true, false}};

    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write ablation table: " + out_path);
    out << "setting,suc,dist\n";
    for (const auto& v : variants) {
        DecodeConfig dc = cfg.decode_config();
        dc.guidance_on = v.guidance;
        dc.self_cond_on = v.self_cond;
        const auto summaries = decode_corpus(corpus, model, v.guidance ? &guide_clf : nullptr, vocab, dc);
        const EvalReport r = evaluate_pairs(corpus, summaries, eval_clf);
        out << v.name << "," << RunConfig::format_real(r.suc) << "," << RunConfig::format_real(r.dist) << "\n";
    }
    out.close();

    ManifestBuilder mb("ablate");
    mb.arg("ablate");
    mb.arg("--corpus", corpus_path);
    mb.arg("--vocab", vocab_path);
    mb.arg("--model", model_path);
    mb.arg("--classifier", classifier_path);
    if (!eval_classifier_path.empty()) mb.arg("--eval-classifier", eval_classifier_path);
    mb.arg("--out", out_path);
    if (!config_path.empty()) mb.arg("--config", config_path);
    if (!preset.empty()) mb.arg("--preset", preset);
    mb.arg("--seed", cfg.raw("seed"));
    mb.m.seed = cfg.get_uint("seed");
    mb.m.config_hash = cfg.hash();
    if (!config_path.empty()) mb.input(config_path);
    mb.input(corpus_path);
    mb.input(vocab_path);
    mb.checkpoint_input(model_path);
    mb.checkpoint_input(classifier_path);
    if (!eval_classifier_path.empty()) mb.checkpoint_input(eval_classifier_path);
    mb.output(out_path);
    mb.write(out_path + ".manifest.json");

    std::cout << "wrote ablation table to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stance-preserving summarization via guided simplex diffusion"};
    app.require_subcommand(1);

    // gen-synthetic
    auto* gen = app.add_subcommand("gen-synthetic", "generate a synthetic stance corpus");
    int gen_n = 300, gen_vocab = 512;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "data";
    gen->add_option("--n", gen_n, "number of examples");
    gen->add_option("--vocab-size", gen_vocab, "vocabulary size");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out-dir", gen_out, "output directory");

    // train-denoiser
    auto* td = app.add_subcommand("train-denoiser", "finetune the diffusion denoiser");
    std::string td_corpus, td_vocab, td_out = "denoiser.bin", td_config, td_preset, td_metrics;
    std::uint64_t td_seed = 0;
    td->add_option("--corpus", td_corpus, "training corpus (jsonl)")->required();
    td->add_option("--vocab", td_vocab, "vocabulary json")->required();
    td->add_option("--out", td_out, "checkpoint path");
    td->add_option("--config", td_config, "key=value config file");
    td->add_option("--preset", td_preset, "config preset (toy or paper)");
    auto* td_seed_opt = td->add_option("--seed", td_seed, "training seed");
    td->add_option("--metrics", td_metrics, "loss curve csv path");

    // train-classifier
    auto* tc = app.add_subcommand("train-classifier", "train the toy stance classifier");
    std::string tc_corpus, tc_vocab, tc_out = "classifier.bin", tc_subset = "all";
    int tc_epochs = 12, tc_dim = 32;
    double tc_lr = 0.5;
    std::uint64_t tc_seed = 0;
    tc->add_option("--corpus", tc_corpus, "labeled corpus (jsonl)")->required();
    tc->add_option("--vocab", tc_vocab, "vocabulary json")->required();
    tc->add_option("--out", tc_out, "checkpoint path");
    tc->add_option("--epochs", tc_epochs, "training epochs");
    tc->add_option("--lr", tc_lr, "learning rate");
    tc->add_option("--dim", tc_dim, "embedding width");
    tc->add_option("--seed", tc_seed, "training seed");
    tc->add_option("--subset", tc_subset, "all, first-half or second-half of the labeled data");

    // summarize
    auto* sm = app.add_subcommand("summarize", "decode summaries for a corpus or single document");
    SummarizeArgs sa;
    sm->add_option("--model", sa.model_path, "denoiser checkpoint")->required();
    sm->add_option("--vocab", sa.vocab_path, "vocabulary json")->required();
    sm->add_option("--classifier", sa.classifier_path, "stance classifier checkpoint");
    sm->add_option("--corpus", sa.corpus_path, "input corpus (jsonl)");
    sm->add_option("--doc", sa.doc_text, "single document text");
    sm->add_option("--out", sa.out_path, "output summaries jsonl")->required();
    sm->add_option("--config", sa.config_path, "key=value config file");
    sm->add_option("--preset", sa.preset, "config preset (toy or paper)");
    sm->add_option("--lambda", sa.lambda, "stance steering intensity");
    sm->add_option("--steps", sa.steps, "decoding steps T");
    sm->add_option("--top-p", sa.top_p, "nucleus mass for logits projection");
    sm->add_option("--max-target-length", sa.max_target, "summary canvas length");
    sm->add_flag("--no-guidance", sa.no_guidance, "disable modular control");
    sm->add_flag("--no-self-cond", sa.no_self_cond, "disable self-conditioning");
    sm->add_flag("--target-from-gold", sa.target_from_gold, "steer toward the gold stance label when present");
    auto* sm_seed_opt = sm->add_option("--seed", sa.seed, "decode seed");
    sm->add_option("--trace", sa.trace_path, "write per-step trace jsonl here");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score summaries against their documents");
    std::string ev_corpus, ev_summaries, ev_vocab, ev_clf, ev_out = "report.json", ev_drift;
    ev->add_option("--corpus", ev_corpus, "corpus with documents (jsonl)")->required();
    ev->add_option("--summaries", ev_summaries, "summaries jsonl")->required();
    ev->add_option("--vocab", ev_vocab, "vocabulary json")->required();
    ev->add_option("--classifier", ev_clf, "stance classifier checkpoint")->required();
    ev->add_option("--out", ev_out, "report json path");
    ev->add_option("--drift-csv", ev_drift, "drift histogram csv path");

    // sweep
    auto* sw = app.add_subcommand("sweep", "grid sweep over lambda / T / top_p");
    std::string sw_grid, sw_corpus, sw_vocab, sw_model, sw_clf, sw_eval_clf, sw_out = "sweep.csv", sw_config, sw_preset;
    std::uint64_t sw_seed = 0;
    sw->add_option("--grid", sw_grid, "grid json file")->required();
    sw->add_option("--corpus", sw_corpus, "input corpus (jsonl)")->required();
    sw->add_option("--vocab", sw_vocab, "vocabulary json")->required();
    sw->add_option("--model", sw_model, "denoiser checkpoint")->required();
    sw->add_option("--classifier", sw_clf, "guidance classifier checkpoint")->required();
    sw->add_option("--eval-classifier", sw_eval_clf, "held-out evaluation classifier checkpoint");
    sw->add_option("--out", sw_out, "csv output path");
    sw->add_option("--config", sw_config, "key=value config file");
    sw->add_option("--preset", sw_preset, "config preset");
    auto* sw_seed_opt = sw->add_option("--seed", sw_seed, "decode seed");

    // ablate
    auto* ab = app.add_subcommand("ablate", "compare full decoding against w/o MC and w/o SC");
    std::string ab_corpus, ab_vocab, ab_model, ab_clf, ab_eval_clf, ab_out = "ablation.csv", ab_config, ab_preset;
    std::uint64_t ab_seed = 0;
    ab->add_option("--corpus", ab_corpus, "input corpus (jsonl)")->required();
    ab->add_option("--vocab", ab_vocab, "vocabulary json")->required();
    ab->add_option("--model", ab_model, "denoiser checkpoint")->required();
    ab->add_option("--classifier", ab_clf, "guidance classifier checkpoint")->required();
    ab->add_option("--eval-classifier", ab_eval_clf, "held-out evaluation classifier checkpoint");
    ab->add_option("--out", ab_out, "csv output path");
    ab->add_option("--config", ab_config, "key=value config file");
    ab->add_option("--preset", ab_preset, "config preset");
    auto* ab_seed_opt = ab->add_option("--seed", ab_seed, "decode seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return run_gen_synthetic(gen_n, gen_vocab, gen_seed, gen_out);
        if (td->parsed())
            return run_train_denoiser(td_corpus, td_vocab, td_out, td_config, td_preset, td_seed,
                                      td_seed_opt->count() > 0, td_metrics);
        if (tc->parsed()) return run_train_classifier(tc_corpus, tc_vocab, tc_out, tc_epochs, tc_lr, tc_dim, tc_seed, tc_subset);
        if (sm->parsed()) {
            sa.seed_given = sm_seed_opt->count() > 0;
            return run_summarize(sa);
        }
        if (ev->parsed()) return run_evaluate(ev_corpus, ev_summaries, ev_vocab, ev_clf, ev_out, ev_drift);
        if (sw->parsed())
            return run_sweep(sw_grid, sw_corpus, sw_vocab, sw_model, sw_clf, sw_eval_clf, sw_out, sw_config,
                             sw_preset, sw_seed, sw_seed_opt->count() > 0);
        if (ab->parsed())
            return run_ablate(ab_corpus, ab_vocab, ab_model, ab_clf, ab_eval_clf, ab_out, ab_config, ab_preset,
                              ab_seed, ab_seed_opt->count() > 0);
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
