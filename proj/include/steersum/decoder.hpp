#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include <json.hpp>

#include "steersum/classifier.hpp"
#include "steersum/denoiser.hpp"
#include "steersum/errors.hpp"
#include "steersum/guidance.hpp"
#include "steersum/schedule.hpp"
#include "steersum/simplex.hpp"
#include "steersum/vocab.hpp"

namespace steersum {

struct DecodeConfig {
    int T = 100;
    double k = 5.0;
    double top_p = 0.95;
    double lambda = 4000.0;  // full-scale default; toy runs re-tune via sweep
    bool guidance_on = true;
    bool self_cond_on = true;
    int max_target_length = 16;
    std::uint64_t seed = 0;
    ScheduleKind schedule = ScheduleKind::Cosine;

    // the recursion feeds the model timestep t+1 (literal reading of the
    // source formulation); flip to feed t instead
    bool timestep_plus_one = true;
    GuidanceObjective objective = GuidanceObjective::LogProb;
    bool target_from_gold = false;
    bool trace_enabled = false;

    void validate() const {
        if (T < 1) throw ConfigError("decode T must be >= 1");
        if (top_p <= 0.0 || top_p > 1.0) throw ConfigError("top_p must be in (0, 1]");
        if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
        if (max_target_length < 1) throw ConfigError("max_target_length must be >= 1");
        if (k <= 0.0) throw ConfigError("k must be positive");
    }
};

struct DecodeStepRecord {
    int t = 0;
    double logp_before = 0.0;
    double logp_after = 0.0;
    int flips = 0;
};

struct DecodeTrace {
    std::vector<DecodeStepRecord> steps;

    void to_jsonl(std::ostream& out) const {
        for (const auto& r : steps) {
            nlohmann::json j{{"t", r.t}, {"logp_before", r.logp_before}, {"logp_after", r.logp_after}, {"flips", r.flips}};
            out << j.dump() << "\n";
        }
    }
};

struct DecodeResult {
    std::vector<int> summary;
    DecodeTrace trace;
};

namespace detail {

inline SimplexSequence gaussian_canvas(int rows, int cols, double k, std::mt19937_64& rng) {
    Matrix<double> m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    std::normal_distribution<double> gauss(0.0, k);
    for (auto& v : m.data) v = gauss(rng);
    return SimplexSequence(std::move(m), k, std::vector<Role>(static_cast<std::size_t>(rows), Role::Summary));
}

/// Copies rows [start, start+len) out as a standalone summary-role sequence.
inline SimplexSequence slice_rows(const SimplexSequence& s, std::size_t start, std::size_t len) {
    Matrix<double> m(len, s.vocab_size());
    for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < s.vocab_size(); ++j) m(i, j) = s.logits(start + i, j);
    return SimplexSequence(std::move(m), s.k, std::vector<Role>(len, Role::Summary));
}

inline void write_rows(SimplexSequence& dst, const SimplexSequence& src, std::size_t start) {
    for (std::size_t i = 0; i < src.length(); ++i)
        for (std::size_t j = 0; j < src.vocab_size(); ++j) dst.logits(start + i, j) = src.logits(i, j);
}

inline double target_logprob(const StanceClassifier& clf, Stance y, const SimplexSequence& s) {
    return std::log(clf.predict_proba(row_normalize(s))[stance_index(y)]);
}

inline std::vector<int> row_argmax(const SimplexSequence& s) {
    std::vector<int> out(s.length());
    for (std::size_t i = 0; i < s.length(); ++i) {
        const double* row = s.logits.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < s.vocab_size(); ++j)
            if (row[j] > row[best]) best = j;
        out[i] = static_cast<int>(best);
    }
    return out;
}

}  // namespace detail

/// Pure-noise summary canvas: i.i.d. N(0, k^2) logits, all roles summary.
inline SimplexSequence init_noise(int len_summary, int vocab_size, double k, std::mt19937_64& rng) {
    if (len_summary < 1) throw ConfigError("init_noise needs len_summary >= 1");
    if (vocab_size < 1) throw ConfigError("init_noise needs vocab_size >= 1");
    if (k <= 0.0) throw ConfigError("simplex scale k must be positive");
    return detail::gaussian_canvas(len_summary, vocab_size, k, rng);
}

/// Perspective-guided diffusion decoding. The canvas holds the document at
/// clean +-k logits and the summary region as noise; each step mixes in the
/// previous estimate (self-conditioning), predicts clean logits, nudges the
/// summary toward the target stance through the classifier gradient,
/// projects back to one-hots and re-noises at the schedule level of the
/// step. Document and pad positions never change.
///
/// `Model` needs `predict(const SimplexSequence&, int t, int t_total)`,
/// `max_len()` and `vocab_size()`.
template <class Model>
DecodeResult decode(const std::vector<int>& document, const Model& model, const StanceClassifier* clf,
                    const Vocabulary& vocab, const DecodeConfig& cfg,
                    std::optional<Stance> gold_stance = std::nullopt) {
    cfg.validate();
    if (cfg.guidance_on && clf == nullptr) throw ConfigError("guided decoding requires a classifier");

    const int l_max = model.max_len();
    const int doc_budget = l_max - 2 - cfg.max_target_length;
    if (doc_budget < 1) throw ConfigError("max_target_length leaves no room for the document");

    // [bos, doc..., sep, summary canvas..., pad...]
    std::vector<int> prefix;
    prefix.push_back(vocab.bos());
    for (std::size_t i = 0; i < document.size() && static_cast<int>(i) < doc_budget; ++i)
        prefix.push_back(document[i]);
    prefix.push_back(vocab.sep());
    const std::size_t sum_start = prefix.size();
    const std::size_t sum_len = static_cast<std::size_t>(cfg.max_target_length);

    std::vector<int> canvas_ids(static_cast<std::size_t>(l_max), vocab.pad());
    std::vector<Role> roles(static_cast<std::size_t>(l_max), Role::Pad);
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        canvas_ids[i] = prefix[i];
        roles[i] = Role::Document;
    }
    for (std::size_t i = sum_start; i < sum_start + sum_len; ++i) roles[i] = Role::Summary;

    const SimplexSequence clean = [&] {
        SimplexSequence c = logits_initialize(canvas_ids, cfg.k, vocab);
        c.roles = roles;
        return c;
    }();

    Stance target = Stance::Center;
    if (cfg.guidance_on && clf != nullptr) {
        if (cfg.target_from_gold && gold_stance.has_value())
            target = *gold_stance;
        else
            target = clf->classify(document);
    }

    std::mt19937_64 rng(cfg.seed);
    const NoiseSchedule sched = make_schedule(cfg.T, cfg.schedule);

    // restore document/pad rows to their clean encodings
    const auto anchor_context = [&](SimplexSequence& s) {
        for (std::size_t i = 0; i < s.length(); ++i) {
            if (roles[i] == Role::Summary) continue;
            for (std::size_t j = 0; j < s.vocab_size(); ++j) s.logits(i, j) = clean.logits(i, j);
        }
    };

    SimplexSequence state = clean;
    detail::write_rows(state, init_noise(static_cast<int>(sum_len), static_cast<int>(state.vocab_size()), cfg.k, rng),
                       sum_start);

    // first estimate from pure noise, no control
    SimplexSequence estimate = model.predict(state, cfg.T, cfg.T);
    anchor_context(estimate);

    std::vector<int> prev_tokens = detail::row_argmax(detail::slice_rows(state, sum_start, sum_len));
    DecodeTrace trace;
    if (cfg.trace_enabled) trace.steps.reserve(static_cast<std::size_t>(cfg.T));
    SimplexSequence final_summary = detail::slice_rows(state, sum_start, sum_len);

    for (int t = cfg.T - 1; t >= 0; --t) {
        SimplexSequence input = state;
        if (cfg.self_cond_on) {
            const SimplexSequence mixed = self_condition_mix(state, estimate);
            for (std::size_t i = sum_start; i < sum_start + sum_len; ++i)
                for (std::size_t j = 0; j < input.vocab_size(); ++j) input.logits(i, j) = mixed.logits(i, j);
        }

        const int model_t = cfg.timestep_plus_one ? t + 1 : t;
        estimate = model.predict(input, model_t, cfg.T);
        anchor_context(estimate);
        if (!all_finite(estimate.logits)) throw DecodeNumericError("non-finite denoiser output at t=" + std::to_string(t));

        SimplexSequence summary = detail::slice_rows(estimate, sum_start, sum_len);

        double logp_before = 0.0, logp_after = 0.0;
        if (cfg.guidance_on) {
            if (cfg.trace_enabled) logp_before = detail::target_logprob(*clf, target, summary);
            summary = control_step(summary, target, cfg.lambda, *clf, cfg.objective);
            if (cfg.trace_enabled) logp_after = detail::target_logprob(*clf, target, summary);
        }

        const SimplexSequence projected = logits_project(summary, cfg.top_p, rng);
        const std::vector<int> tokens = detail::row_argmax(projected);
        int flips = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (tokens[i] != prev_tokens[i]) ++flips;
        prev_tokens = tokens;

        if (cfg.trace_enabled) trace.steps.push_back({t, logp_before, logp_after, flips});

        // re-noise at the level of this step and anchor the context.
        // alpha_bar[0] = 1, so the last step keeps the projected estimate.
        const std::vector<bool> all_rows(sum_len, true);
        const SimplexSequence renoised = forward_diffuse_alpha(projected, sched.at(t), rng, all_rows);
        detail::write_rows(state, renoised, sum_start);
        final_summary = projected;
    }

    // summary = argmax of the final projected estimate, cut at eos, pads out
    std::vector<int> ids = detail::row_argmax(final_summary);
    std::vector<int> out;
    for (int id : ids) {
        if (id == vocab.eos()) break;
        if (id == vocab.pad()) continue;
        out.push_back(id);
    }
    return {std::move(out), std::move(trace)};
}

struct SweepSetting {
    double lambda = 0.0;
    int T = 100;
    double top_p = 0.95;
};

struct SweepRow {
    SweepSetting setting;
    double suc = 0.0;
    double dist = 0.0;
};

struct SweepGrid {
    std::vector<double> lambdas;
    std::vector<int> Ts;
    std::vector<double> top_ps;
};

/// Per-document decode seed; keeps documents independent but reproducible.
inline std::uint64_t document_seed(std::uint64_t base, std::size_t index) {
    return base + 0x9e3779b97f4a7c15ull * (index + 1);
}

/// Documents decode concurrently; each call owns its generator (seeded per
/// document), so the result does not depend on scheduling.
template <class Model>
std::vector<std::vector<int>> decode_corpus(const std::vector<SummarizationExample>& docs, const Model& model,
                                            const StanceClassifier* clf, const Vocabulary& vocab,
                                            const DecodeConfig& cfg) {
    std::vector<std::vector<int>> out(docs.size());
    std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (long long ii = 0; ii < static_cast<long long>(docs.size()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        try {
            DecodeConfig per = cfg;
            per.seed = document_seed(cfg.seed, i);
            std::optional<Stance> gold;
            if (docs[i].stance_label) gold = stance_from_int(*docs[i].stance_label);
            out[i] = decode(docs[i].document, model, clf, vocab, per, gold).summary;
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

/// Cartesian sweep over {lambda, T, top_p}; each cell decodes the corpus
/// and scores stance preservation with the evaluation classifier.
template <class Model>
std::vector<SweepRow> sweep_decode(const std::vector<SummarizationExample>& docs, const Model& model,
                                   const StanceClassifier& guidance_clf, const StanceClassifier& eval_clf,
                                   const Vocabulary& vocab, const SweepGrid& grid, const DecodeConfig& base) {
    if (docs.empty()) throw DataError("sweep needs at least one document");
    const auto lambdas = grid.lambdas.empty() ? std::vector<double>{base.lambda} : grid.lambdas;
    const auto Ts = grid.Ts.empty() ? std::vector<int>{base.T} : grid.Ts;
    const auto top_ps = grid.top_ps.empty() ? std::vector<double>{base.top_p} : grid.top_ps;

    std::vector<SweepRow> rows;
    for (const double lambda : lambdas) {
        for (const int T : Ts) {
            for (const double top_p : top_ps) {
                DecodeConfig cfg = base;
                cfg.lambda = lambda;
                cfg.T = T;
                cfg.top_p = top_p;
                cfg.guidance_on = base.guidance_on;
                const auto summaries = decode_corpus(docs, model, cfg.guidance_on ? &guidance_clf : nullptr, vocab, cfg);

                double suc = 0.0, dist = 0.0;
                for (std::size_t i = 0; i < docs.size(); ++i) {
                    const Stance d = f_bias(eval_clf, docs[i].document);
                    const Stance s = summaries[i].empty() ? Stance::Center : f_bias(eval_clf, summaries[i]);
                    suc += d == s ? 1.0 : 0.0;
                    dist += std::abs(stance_value(d) - stance_value(s));
                }
                rows.push_back({{lambda, T, top_p}, suc / docs.size(), dist / docs.size()});
            }
        }
    }
    return rows;
}

}  // namespace steersum
