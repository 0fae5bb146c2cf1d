#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "steersum/classifier.hpp"
#include "steersum/denoiser.hpp"
#include "steersum/errors.hpp"
#include "steersum/hash.hpp"
#include "steersum/vocab.hpp"

namespace steersum {

// Checkpoints are a raw little-endian weight blob plus a JSON sidecar
// (<path>.json) holding the config, the vocabulary hash and a content hash
// of the blob. Loaders refuse mismatched vocabulary hashes.

namespace detail {

template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_pod(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("truncated checkpoint");
}

template <class Real>
void write_matrix(std::ostream& out, const Matrix<Real>& m) {
    write_pod(out, static_cast<std::uint64_t>(m.rows));
    write_pod(out, static_cast<std::uint64_t>(m.cols));
    out.write(reinterpret_cast<const char*>(m.data.data()),
              static_cast<std::streamsize>(m.data.size() * sizeof(Real)));
}

template <class Real>
void read_matrix(std::istream& in, Matrix<Real>& m) {
    std::uint64_t rows = 0, cols = 0;
    read_pod(in, rows);
    read_pod(in, cols);
    if (m.rows != rows || m.cols != cols) throw DataError("checkpoint tensor shape mismatch");
    in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(Real)));
    if (!in) throw DataError("truncated checkpoint");
}

inline nlohmann::json train_config_json(const TrainConfig& c) {
    return nlohmann::json{{"training_steps", c.training_steps},
                          {"learning_rate", c.learning_rate},
                          {"diffusion_steps", c.diffusion_steps},
                          {"max_target_length", c.max_target_length},
                          {"k", c.k},
                          {"self_cond_prob", c.self_cond_prob},
                          {"batch_size", c.batch_size},
                          {"seed", c.seed},
                          {"schedule", to_string(c.schedule)},
                          {"max_len", c.max_len},
                          {"width", c.width},
                          {"layers", c.layers},
                          {"heads", c.heads}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.training_steps = j.at("training_steps").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.diffusion_steps = j.at("diffusion_steps").get<int>();
    c.max_target_length = j.at("max_target_length").get<int>();
    c.k = j.at("k").get<double>();
    c.self_cond_prob = j.at("self_cond_prob").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.schedule = schedule_kind_from_string(j.at("schedule").get<std::string>());
    c.max_len = j.at("max_len").get<int>();
    c.width = j.at("width").get<int>();
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    return c;
}

inline void write_sidecar(const std::string& path, const std::string& kind, const nlohmann::json& config,
                          const std::string& vocab_hash) {
    nlohmann::json j{{"kind", kind}, {"config", config}, {"vocab_hash", vocab_hash}, {"content_hash", hash_file(path)}};
    std::ofstream out(path + ".json");
    if (!out) throw DataError("cannot write checkpoint sidecar: " + path + ".json");
    out << j.dump(2) << "\n";
}

inline nlohmann::json read_sidecar(const std::string& path, const std::string& kind, const std::string& vocab_hash) {
    std::ifstream in(path + ".json");
    if (!in) throw DataError("missing checkpoint sidecar: " + path + ".json");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint sidecar " + path + ".json: " + e.what());
    }
    if (j.at("kind").get<std::string>() != kind) throw DataError("checkpoint kind mismatch for " + path);
    if (j.at("vocab_hash").get<std::string>() != vocab_hash)
        throw ConfigError("checkpoint " + path + " was built against a different vocabulary");
    if (j.at("content_hash").get<std::string>() != hash_file(path))
        throw DataError("checkpoint " + path + " content hash mismatch");
    return j;
}

}  // namespace detail

template <class Real>
void save_denoiser(DenoiserModel<Real>& model, const Vocabulary& vocab, const std::string& path) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write checkpoint: " + path);
        out.write("SSDN", 4);
        detail::write_pod(out, std::uint32_t{1});
        detail::write_pod(out, std::int32_t{model.vocab_size()});
        for (auto* p : model.params()) detail::write_matrix(out, p->w);
    }
    detail::write_sidecar(path, "denoiser", detail::train_config_json(model.config()), vocab.hash());
}

template <class Real = float>
DenoiserModel<Real> load_denoiser(const std::string& path, const Vocabulary& vocab) {
    const nlohmann::json sidecar = detail::read_sidecar(path, "denoiser", vocab.hash());
    const TrainConfig cfg = detail::train_config_from_json(sidecar.at("config"));

    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SSDN", 4) != 0) throw DataError("not a denoiser checkpoint: " + path);
    std::uint32_t version = 0;
    detail::read_pod(in, version);
    if (version != 1) throw DataError("unsupported checkpoint version");
    std::int32_t vocab_size = 0;
    detail::read_pod(in, vocab_size);
    if (vocab_size != vocab.size()) throw ConfigError("checkpoint vocabulary size mismatch");

    std::mt19937_64 init_rng(0);
    DenoiserModel<Real> model(vocab_size, cfg, init_rng);
    for (auto* p : model.params()) detail::read_matrix(in, p->w);
    return model;
}

inline void save_classifier(const ToyStanceClassifier& clf, const Vocabulary& vocab, const std::string& path) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write checkpoint: " + path);
        out.write("SSCL", 4);
        detail::write_pod(out, std::uint32_t{1});
        detail::write_pod(out, std::int32_t{clf.vocab_size()});
        detail::write_pod(out, std::int32_t{clf.embed_dim()});
        detail::write_pod(out, std::int32_t{clf.pad_id()});
        detail::write_pod(out, clf.heldout_accuracy());
        detail::write_matrix(out, clf.embedding());
        detail::write_matrix(out, clf.head_weight());
        detail::write_matrix(out, clf.head_bias());
    }
    detail::write_sidecar(path, "classifier",
                          nlohmann::json{{"embed_dim", clf.embed_dim()}, {"heldout_accuracy", clf.heldout_accuracy()}},
                          vocab.hash());
}

inline ToyStanceClassifier load_classifier(const std::string& path, const Vocabulary& vocab) {
    (void)detail::read_sidecar(path, "classifier", vocab.hash());

    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SSCL", 4) != 0) throw DataError("not a classifier checkpoint: " + path);
    std::uint32_t version = 0;
    detail::read_pod(in, version);
    if (version != 1) throw DataError("unsupported checkpoint version");
    std::int32_t vocab_size = 0, dim = 0, pad_id = 0;
    double heldout = 0.0;
    detail::read_pod(in, vocab_size);
    detail::read_pod(in, dim);
    detail::read_pod(in, pad_id);
    detail::read_pod(in, heldout);
    if (vocab_size != vocab.size()) throw ConfigError("checkpoint vocabulary size mismatch");

    std::mt19937_64 init_rng(0);
    ToyStanceClassifier clf(vocab, dim, init_rng);
    clf.set_shape(vocab_size, dim, pad_id);
    clf.set_heldout_accuracy(heldout);
    detail::read_matrix(in, clf.embedding());
    detail::read_matrix(in, clf.head_weight());
    detail::read_matrix(in, clf.head_bias());
    return clf;
}

}  // namespace steersum
