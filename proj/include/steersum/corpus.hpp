#pragma once

#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "steersum/classifier.hpp"
#include "steersum/denoiser.hpp"
#include "steersum/errors.hpp"
#include "steersum/vocab.hpp"

namespace steersum {

/// Reads a JSON Lines corpus: {"id", "document", "summary"?, "stance_label"?}.
/// Documents and summaries are tokenized against the shared vocabulary.
inline std::vector<SummarizationExample> load_corpus(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus: " + path);

    std::vector<SummarizationExample> out;
    std::set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        SummarizationExample ex;
        try {
            ex.id = j.at("id").get<std::string>();
            ex.document = tokenize(j.at("document").get<std::string>(), vocab);
            if (j.contains("summary") && !j["summary"].is_null())
                ex.summary = tokenize(j["summary"].get<std::string>(), vocab);
            if (j.contains("stance_label") && !j["stance_label"].is_null()) {
                const int label = j["stance_label"].get<int>();
                if (label < -1 || label > 1)
                    throw DataError(path + " line " + std::to_string(line_no) + ": stance_label " +
                                    std::to_string(label) + " outside {-1, 0, 1}");
                ex.stance_label = label;
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        if (ex.document.empty())
            throw DataError(path + " line " + std::to_string(line_no) + ": document is empty");
        if (!seen_ids.insert(ex.id).second)
            throw DataError(path + " line " + std::to_string(line_no) + ": duplicate id '" + ex.id + "'");
        out.push_back(std::move(ex));
    }
    return out;
}

inline void save_corpus(const std::vector<SummarizationExample>& corpus, const Vocabulary& vocab,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write corpus: " + path);
    for (const auto& ex : corpus) {
        nlohmann::json j{{"id", ex.id}, {"document", detokenize(ex.document, vocab)}};
        if (!ex.summary.empty()) j["summary"] = detokenize(ex.summary, vocab);
        if (ex.stance_label) j["stance_label"] = *ex.stance_label;
        out << j.dump() << "\n";
    }
}

struct SyntheticCorpus {
    std::vector<SummarizationExample> examples;
    Vocabulary vocab;
};

inline const std::vector<std::string>& stance_marker_words(Stance s) {
    static const std::vector<std::string> left = {"lmark0", "lmark1", "lmark2", "lmark3",
                                                  "lmark4", "lmark5", "lmark6", "lmark7"};
    static const std::vector<std::string> center = {"cmark0", "cmark1", "cmark2", "cmark3",
                                                    "cmark4", "cmark5", "cmark6", "cmark7"};
    static const std::vector<std::string> right = {"rmark0", "rmark1", "rmark2", "rmark3",
                                                   "rmark4", "rmark5", "rmark6", "rmark7"};
    switch (s) {
        case Stance::Left: return left;
        case Stance::Center: return center;
        case Stance::Right: return right;
    }
    return center;
}

/// Templated synthetic stance corpus. Documents mix neutral filler with a
/// majority of class-specific marker words (marker sets are pairwise
/// disjoint, so the corpus is linearly separable by marker counts); half
/// the documents also carry one or two off-class markers, leaving room for
/// an unguided model to drift. The paired summary restates every marker in
/// document order followed by a fixed three-token lead-out, so it is a
/// deterministic function of the document.
inline SyntheticCorpus gen_synthetic(int n, int vocab_size, std::uint64_t seed) {
    if (n < 3) throw ConfigError("gen_synthetic needs n >= 3");
    if (vocab_size < 50) throw ConfigError("gen_synthetic needs vocab_size >= 50");

    std::vector<std::string> extra = {"<unk>", "lead0", "lead1", "lead2"};
    for (Stance s : {Stance::Left, Stance::Center, Stance::Right})
        for (const auto& w : stance_marker_words(s)) extra.push_back(w);
    const int filler_count = vocab_size - 4 - static_cast<int>(extra.size());
    if (filler_count < 8) throw ConfigError("vocab_size too small for filler vocabulary");
    std::vector<std::string> fillers;
    for (int i = 0; i < filler_count; ++i) fillers.push_back("filler" + std::to_string(i));
    extra.insert(extra.end(), fillers.begin(), fillers.end());
    Vocabulary vocab = Vocabulary::with_specials(extra);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> doc_len(20, 48);
    std::uniform_int_distribution<int> own_count(3, 6);
    std::uniform_int_distribution<int> off_count(1, 2);
    std::uniform_int_distribution<int> marker_pick(0, 7);
    std::uniform_int_distribution<int> filler_pick(0, filler_count - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const Stance classes[3] = {Stance::Left, Stance::Center, Stance::Right};
    std::vector<SummarizationExample> examples;
    examples.reserve(static_cast<std::size_t>(n));

    for (int i = 0; i < n; ++i) {
        const Stance label = classes[i % 3];
        SummarizationExample ex;
        ex.id = "syn" + std::to_string(i);
        ex.stance_label = stance_value(label);

        const int dlen = doc_len(rng);
        std::vector<std::string> words(static_cast<std::size_t>(dlen));
        for (auto& w : words) w = fillers[static_cast<std::size_t>(filler_pick(rng))];

        const int own = own_count(rng);
        int off = unit(rng) < 0.5 ? off_count(rng) : 0;
        off = std::min(off, own - 1);  // own markers always hold the strict majority
        const Stance off_class = classes[(i + 1 + (unit(rng) < 0.5 ? 0 : 1)) % 3];

        std::vector<std::size_t> slots(static_cast<std::size_t>(dlen));
        for (std::size_t p = 0; p < slots.size(); ++p) slots[p] = p;
        std::shuffle(slots.begin(), slots.end(), rng);
        std::vector<std::pair<std::size_t, std::string>> placed;
        for (int m = 0; m < own; ++m)
            placed.emplace_back(slots[static_cast<std::size_t>(m)],
                                stance_marker_words(label)[static_cast<std::size_t>(marker_pick(rng))]);
        for (int m = 0; m < off; ++m)
            placed.emplace_back(slots[static_cast<std::size_t>(own + m)],
                                stance_marker_words(off_class)[static_cast<std::size_t>(marker_pick(rng))]);
        for (const auto& [pos, w] : placed) words[pos] = w;
        for (const auto& w : words) ex.document.push_back(*vocab.id_of(w));

        // summary: every marker in document order, then the fixed lead-out
        std::sort(placed.begin(), placed.end());
        std::vector<std::string> sum_words;
        for (const auto& [pos, w] : placed) sum_words.push_back(w);
        sum_words.insert(sum_words.end(), {"lead0", "lead1", "lead2"});
        for (const auto& w : sum_words) ex.summary.push_back(*vocab.id_of(w));

        examples.push_back(std::move(ex));
    }
    return {std::move(examples), std::move(vocab)};
}

/// Labeled (tokens, stance) pairs for classifier training: every document
/// and summary carrying a gold label contributes one item.
inline std::vector<std::pair<std::vector<int>, Stance>> classifier_corpus(
    const std::vector<SummarizationExample>& corpus) {
    std::vector<std::pair<std::vector<int>, Stance>> out;
    for (const auto& ex : corpus) {
        if (!ex.stance_label) continue;
        const Stance s = stance_from_int(*ex.stance_label);
        out.emplace_back(ex.document, s);
        if (!ex.summary.empty()) out.emplace_back(ex.summary, s);
    }
    return out;
}

}  // namespace steersum
