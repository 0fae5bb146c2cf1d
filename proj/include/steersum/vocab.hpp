#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "steersum/errors.hpp"
#include "steersum/hash.hpp"

namespace steersum {

/// Shared vocabulary of the denoiser and the stance classifiers. Token ids
/// are dense 0..|V|-1 in the order of `tokens`; pad/bos/eos/sep are ordinary
/// entries singled out by id.
class Vocabulary {
public:
    Vocabulary() = default;

    Vocabulary(std::vector<std::string> tokens, int pad, int bos, int eos, int sep)
        : tokens_(std::move(tokens)), pad_(pad), bos_(bos), eos_(eos), sep_(sep) {
        validate();
        for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<int>(i));
        if (index_.size() != tokens_.size()) throw DataError("vocabulary has duplicate tokens");
    }

    /// Builds [<pad>, <bos>, <eos>, <sep>, extra...].
    static Vocabulary with_specials(const std::vector<std::string>& extra) {
        std::vector<std::string> toks = {"<pad>", "<bos>", "<eos>", "<sep>"};
        toks.insert(toks.end(), extra.begin(), extra.end());
        return Vocabulary(std::move(toks), 0, 1, 2, 3);
    }

    int size() const { return static_cast<int>(tokens_.size()); }
    int pad() const { return pad_; }
    int bos() const { return bos_; }
    int eos() const { return eos_; }
    int sep() const { return sep_; }

    bool is_special(int id) const { return id == pad_ || id == bos_ || id == eos_ || id == sep_; }

    const std::string& token(int id) const {
        if (id < 0 || id >= size()) throw TokenError("id " + std::to_string(id) + " out of range");
        return tokens_[static_cast<std::size_t>(id)];
    }

    std::optional<int> id_of(const std::string& word) const {
        auto it = index_.find(word);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// Order- and content-sensitive hash; stored in checkpoint sidecars so
    /// loaders can refuse models trained against a different vocabulary.
    std::string hash() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& t : tokens_) {
            h = fnv1a64(std::string_view{t}, h);
            h = fnv1a64(std::string_view{"\x1f", 1}, h);
        }
        const int specials[4] = {pad_, bos_, eos_, sep_};
        h = fnv1a64(specials, sizeof(specials), h);
        return to_hex(h);
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"tokens", tokens_}, {"pad", pad_}, {"bos", bos_}, {"eos", eos_}, {"sep", sep_}};
    }

    static Vocabulary from_json(const nlohmann::json& j) {
        return Vocabulary(j.at("tokens").get<std::vector<std::string>>(), j.at("pad").get<int>(),
                          j.at("bos").get<int>(), j.at("eos").get<int>(), j.at("sep").get<int>());
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write vocabulary: " + path);
        out << to_json().dump() << "\n";
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot read vocabulary: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("vocabulary " + path + ": " + e.what());
        }
        return from_json(j);
    }

private:
    void validate() const {
        if (tokens_.size() < 4) throw DataError("vocabulary needs at least 4 tokens");
        const int n = static_cast<int>(tokens_.size());
        const int specials[4] = {pad_, bos_, eos_, sep_};
        for (int s : specials)
            if (s < 0 || s >= n) throw DataError("special id out of range");
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                if (specials[a] == specials[b]) throw DataError("special ids must be distinct");
    }

    std::vector<std::string> tokens_;
    int pad_ = 0, bos_ = 1, eos_ = 2, sep_ = 3;
    std::unordered_map<std::string, int> index_;
};

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

/// Whitespace word tokenizer. Words are case-folded; out-of-vocabulary
/// words map to "<unk>" when the vocabulary carries one and are an error
/// otherwise.
inline std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string word;
    const auto unk = vocab.id_of("<unk>");
    while (in >> word) {
        word = lowercase(word);
        if (auto id = vocab.id_of(word)) {
            out.push_back(*id);
        } else if (unk) {
            out.push_back(*unk);
        } else {
            throw TokenError("word '" + word + "' not in vocabulary and no <unk> entry");
        }
    }
    return out;
}

/// Space-joined surface form; special tokens are dropped.
inline std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
    std::string out;
    for (int id : ids) {
        if (vocab.is_special(id)) continue;
        if (!out.empty()) out += ' ';
        out += vocab.token(id);
    }
    return out;
}

}  // namespace steersum
