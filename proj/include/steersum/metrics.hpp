#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "steersum/classifier.hpp"
#include "steersum/errors.hpp"

namespace steersum {

/// Document/summary stance label pair for one example.
struct StancePair {
    Stance doc_label = Stance::Center;
    Stance sum_label = Stance::Center;
    std::string id;
};

inline const std::array<std::string, 5>& drift_bucket_names() {
    static const std::array<std::string, 5> names = {"Left", "Lean Left", "No change", "Lean Right", "Right"};
    return names;
}

/// Fraction of pairs whose summary label equals the document label.
inline double success_rate(const std::vector<StancePair>& pairs) {
    if (pairs.empty()) throw DataError("success_rate needs a non-empty pair list");
    std::size_t hits = 0;
    for (const auto& p : pairs)
        if (p.doc_label == p.sum_label) ++hits;
    return static_cast<double>(hits) / pairs.size();
}

/// Mean absolute label difference; 0 (perfect) to 2 (opposite poles).
inline double stance_distance(const std::vector<StancePair>& pairs) {
    if (pairs.empty()) throw DataError("stance_distance needs a non-empty pair list");
    double total = 0.0;
    for (const auto& p : pairs) total += std::abs(stance_value(p.doc_label) - stance_value(p.sum_label));
    return total / pairs.size();
}

/// Buckets (sum - doc) shifts: -2 Left, -1 Lean Left, 0 No change,
/// +1 Lean Right, +2 Right.
inline std::array<std::int64_t, 5> drift_histogram(const std::vector<StancePair>& pairs) {
    if (pairs.empty()) throw DataError("drift_histogram needs a non-empty pair list");
    std::array<std::int64_t, 5> buckets{};
    for (const auto& p : pairs) {
        const int shift = stance_value(p.sum_label) - stance_value(p.doc_label);
        buckets[static_cast<std::size_t>(shift + 2)]++;
    }
    return buckets;
}

/// Over center-labeled documents: freq(right summaries) - freq(left ones).
inline double inherent_bias(const std::vector<StancePair>& center_pairs) {
    if (center_pairs.empty()) throw DataError("inherent_bias needs a non-empty pair list");
    std::int64_t right = 0, left = 0;
    for (const auto& p : center_pairs) {
        if (p.doc_label != Stance::Center) throw DataError("inherent_bias expects only center-labeled documents");
        if (p.sum_label == Stance::Right) ++right;
        if (p.sum_label == Stance::Left) ++left;
    }
    return (static_cast<double>(right) - static_cast<double>(left)) / center_pairs.size();
}

namespace detail {

inline double f1(double overlap, double cand, double ref) {
    if (cand <= 0.0 || ref <= 0.0) return 0.0;
    const double p = overlap / cand;
    const double r = overlap / ref;
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

template <class Key>
double clipped_overlap(const std::vector<Key>& a, const std::vector<Key>& b) {
    std::map<Key, int> counts;
    for (const auto& k : a) counts[k]++;
    double overlap = 0.0;
    for (const auto& k : b) {
        auto it = counts.find(k);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            overlap += 1.0;
        }
    }
    return overlap;
}

inline std::size_t lcs_length(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace detail

struct RougeScores {
    double r1 = 0.0;
    double r2 = 0.0;
    double rl = 0.0;
};

/// Unigram/bigram overlap F1 and LCS F1 over token ids. No stemming or
/// stopword handling; case folding is the tokenizer's business.
inline RougeScores rouge_scores(const std::vector<int>& candidate, const std::vector<int>& reference) {
    if (reference.empty()) throw DataError("rouge needs a non-empty reference");
    RougeScores out;

    out.r1 = detail::f1(detail::clipped_overlap(candidate, reference), static_cast<double>(candidate.size()),
                        static_cast<double>(reference.size()));

    std::vector<std::pair<int, int>> cb, rb;
    for (std::size_t i = 0; i + 1 < candidate.size(); ++i) cb.emplace_back(candidate[i], candidate[i + 1]);
    for (std::size_t i = 0; i + 1 < reference.size(); ++i) rb.emplace_back(reference[i], reference[i + 1]);
    out.r2 = detail::f1(detail::clipped_overlap(cb, rb), static_cast<double>(cb.size()), static_cast<double>(rb.size()));

    const double lcs = static_cast<double>(detail::lcs_length(candidate, reference));
    out.rl = detail::f1(lcs, static_cast<double>(candidate.size()), static_cast<double>(reference.size()));
    return out;
}

/// Extractive fragment density: greedy leftmost-longest shared fragments,
/// sum of squared fragment lengths over summary length. 0 means nothing is
/// copied; |s| means the summary is one verbatim document span.
inline double abstractiveness(const std::vector<int>& document, const std::vector<int>& summary) {
    if (summary.empty()) throw DataError("abstractiveness needs a non-empty summary");
    double sq_sum = 0.0;
    std::size_t i = 0;
    while (i < summary.size()) {
        std::size_t best = 0;
        for (std::size_t d = 0; d < document.size(); ++d) {
            std::size_t len = 0;
            while (i + len < summary.size() && d + len < document.size() && summary[i + len] == document[d + len])
                ++len;
            best = std::max(best, len);
        }
        if (best == 0) {
            ++i;
        } else {
            sq_sum += static_cast<double>(best) * static_cast<double>(best);
            i += best;
        }
    }
    return sq_sum / static_cast<double>(summary.size());
}

/// Full per-corpus metrics bundle.
struct EvalReport {
    double suc = 0.0;
    double dist = 0.0;
    std::array<std::int64_t, 5> drift{};
    std::optional<double> inherent = std::nullopt;  // absent when no center docs
    std::optional<RougeScores> rouge = std::nullopt;  // absent without references
    double abstr = 0.0;
    int n = 0;

    nlohmann::json to_json() const {
        nlohmann::json j{{"n", n}, {"success_rate", suc}, {"stance_distance", dist}, {"abstractiveness", abstr}};
        nlohmann::json d;
        for (std::size_t b = 0; b < 5; ++b) d[drift_bucket_names()[b]] = drift[b];
        j["drift"] = d;
        if (inherent)
            j["inherent_bias"] = *inherent;
        else
            j["inherent_bias"] = nullptr;
        if (rouge) {
            j["rouge1"] = rouge->r1;
            j["rouge2"] = rouge->r2;
            j["rougeL"] = rouge->rl;
        } else {
            j["rouge_skipped"] = "no references supplied";
        }
        return j;
    }

    void drift_csv(std::ostream& out) const {
        out << "bucket,count\n";
        for (std::size_t b = 0; b < 5; ++b) out << drift_bucket_names()[b] << "," << drift[b] << "\n";
    }
};

/// Labels every document/summary with the classifier and assembles all
/// metrics. References are optional; without them the ROUGE block is
/// absent and flagged.
inline EvalReport build_report(const std::vector<std::vector<int>>& docs,
                               const std::vector<std::vector<int>>& summaries,
                               const std::vector<std::vector<int>>* references, const StanceClassifier& clf) {
    if (docs.size() != summaries.size()) throw DataError("documents and summaries must be parallel lists");
    if (references && references->size() != docs.size())
        throw DataError("references must parallel documents when given");
    if (docs.empty()) throw DataError("build_report needs at least one example");

    std::vector<StancePair> pairs;
    pairs.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        StancePair p;
        p.id = std::to_string(i);
        p.doc_label = f_bias(clf, docs[i]);
        p.sum_label = summaries[i].empty() ? Stance::Center : f_bias(clf, summaries[i]);
        pairs.push_back(p);
    }

    EvalReport report;
    report.n = static_cast<int>(pairs.size());
    report.suc = success_rate(pairs);
    report.dist = stance_distance(pairs);
    report.drift = drift_histogram(pairs);

    std::vector<StancePair> center;
    for (const auto& p : pairs)
        if (p.doc_label == Stance::Center) center.push_back(p);
    if (!center.empty()) report.inherent = inherent_bias(center);

    double abstr = 0.0;
    int abstr_n = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (summaries[i].empty()) continue;
        abstr += abstractiveness(docs[i], summaries[i]);
        ++abstr_n;
    }
    report.abstr = abstr_n > 0 ? abstr / abstr_n : 0.0;

    if (references) {
        RougeScores total;
        int rn = 0;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            if ((*references)[i].empty()) continue;
            const RougeScores r = rouge_scores(summaries[i], (*references)[i]);
            total.r1 += r.r1;
            total.r2 += r.r2;
            total.rl += r.rl;
            ++rn;
        }
        if (rn > 0) {
            total.r1 /= rn;
            total.r2 /= rn;
            total.rl /= rn;
            report.rouge = total;
        }
    }
    return report;
}

}  // namespace steersum
