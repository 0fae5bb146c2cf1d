#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "steersum/errors.hpp"
#include "steersum/matrix.hpp"
#include "steersum/schedule.hpp"
#include "steersum/vocab.hpp"

namespace steersum {

enum class Role : std::uint8_t { Document, Summary, Pad };

/// Continuous token representation: one row of vocabulary-sized logits per
/// position, nominally +-k almost-one-hots, plus a per-position role used
/// for noising, loss masking and output extraction.
struct SimplexSequence {
    Matrix<double> logits;    // L x |V|
    double k = 5.0;
    std::vector<Role> roles;  // length L

    SimplexSequence() = default;

    SimplexSequence(Matrix<double> l, double scale, std::vector<Role> r)
        : logits(std::move(l)), k(scale), roles(std::move(r)) {
        if (k <= 0.0) throw ConfigError("simplex scale k must be positive");
        if (roles.size() != logits.rows) throw ShapeError("roles length must equal sequence length");
    }

    std::size_t length() const { return logits.rows; }
    std::size_t vocab_size() const { return logits.cols; }
};

/// Encodes token ids as +k at the token column, -k elsewhere.
inline SimplexSequence logits_initialize(const std::vector<int>& tokens, double k, const Vocabulary& vocab,
                                         Role role = Role::Summary) {
    if (k <= 0.0) throw ConfigError("simplex scale k must be positive");
    const auto v = static_cast<std::size_t>(vocab.size());
    Matrix<double> m(tokens.size(), v, -k);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const int id = tokens[i];
        if (id < 0 || id >= vocab.size()) throw TokenError("token id " + std::to_string(id) + " out of range");
        m(i, static_cast<std::size_t>(id)) = k;
    }
    return SimplexSequence(std::move(m), k, std::vector<Role>(tokens.size(), role));
}

/// Per-row softmax of the logits. Throws on non-finite input.
inline Matrix<double> row_normalize(const SimplexSequence& s) {
    if (!all_finite(s.logits)) throw NumericError("non-finite logits in row_normalize");
    return softmax_rows(s.logits);
}

/// Per-row argmax with lowest-index tie break; pad-role positions are
/// dropped from the output.
inline std::vector<int> argmax_decode(const SimplexSequence& s, const Vocabulary& vocab) {
    if (s.vocab_size() != static_cast<std::size_t>(vocab.size()))
        throw ShapeError("sequence vocabulary width does not match vocabulary");
    std::vector<int> out;
    out.reserve(s.length());
    for (std::size_t i = 0; i < s.length(); ++i) {
        if (s.roles[i] == Role::Pad) continue;
        const double* row = s.logits.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < s.vocab_size(); ++j)
            if (row[j] > row[best]) best = j;
        out.push_back(static_cast<int>(best));
    }
    return out;
}

/// Forward diffusion at an explicit retention level:
///   out = sqrt(alpha_bar) * s0 + sqrt(1 - alpha_bar) * eps,  eps ~ N(0, k^2 I),
/// applied to rows where noise_mask is true; other rows are copied verbatim.
inline SimplexSequence forward_diffuse_alpha(const SimplexSequence& s0, double alpha_bar, std::mt19937_64& rng,
                                             const std::vector<bool>& noise_mask) {
    if (noise_mask.size() != s0.length()) throw ShapeError("noise mask length must equal sequence length");
    if (alpha_bar < 0.0 || alpha_bar > 1.0) throw ScheduleError("alpha_bar outside [0, 1]");
    const double signal = std::sqrt(alpha_bar);
    const double noise = std::sqrt(1.0 - alpha_bar);
    SimplexSequence out = s0;
    std::normal_distribution<double> gauss(0.0, s0.k);
    for (std::size_t i = 0; i < s0.length(); ++i) {
        if (!noise_mask[i]) continue;
        const double* src = s0.logits.row(i);
        double* dst = out.logits.row(i);
        for (std::size_t j = 0; j < s0.vocab_size(); ++j) dst[j] = signal * src[j] + noise * gauss(rng);
    }
    return out;
}

/// Forward diffusion at schedule step t in [1, T].
inline SimplexSequence forward_diffuse(const SimplexSequence& s0, int t, const NoiseSchedule& sched,
                                       std::mt19937_64& rng, const std::vector<bool>& noise_mask) {
    if (t < 1 || t > sched.steps()) throw ScheduleError("forward_diffuse timestep outside [1, T]");
    return forward_diffuse_alpha(s0, sched.at(t), rng, noise_mask);
}

/// Nucleus projection: every row snaps back to an exact +-k one-hot whose
/// hot index is sampled from the smallest set of highest-probability tokens
/// with mass >= top_p, renormalized. Ties sort stably by index.
inline SimplexSequence logits_project(const SimplexSequence& s, double top_p, std::mt19937_64& rng) {
    if (top_p <= 0.0 || top_p > 1.0) throw ConfigError("top_p must be in (0, 1]");
    const Matrix<double> probs = row_normalize(s);
    const std::size_t v = s.vocab_size();
    SimplexSequence out = s;
    std::vector<std::size_t> order(v);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < s.length(); ++i) {
        const double* p = probs.row(i);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });

        std::size_t nucleus = v;
        double mass = 0.0;
        for (std::size_t r = 0; r < v; ++r) {
            mass += p[order[r]];
            if (mass >= top_p) {
                nucleus = r + 1;
                break;
            }
        }
        double nucleus_mass = 0.0;
        for (std::size_t r = 0; r < nucleus; ++r) nucleus_mass += p[order[r]];

        std::size_t pick = order[0];
        if (nucleus > 1) {
            const double u = unit(rng) * nucleus_mass;
            double acc = 0.0;
            for (std::size_t r = 0; r < nucleus; ++r) {
                acc += p[order[r]];
                if (u <= acc) {
                    pick = order[r];
                    break;
                }
                pick = order[r];  // numeric tail: fall back to the last nucleus entry
            }
        }

        double* dst = out.logits.row(i);
        for (std::size_t j = 0; j < v; ++j) dst[j] = -s.k;
        dst[pick] = s.k;
    }
    return out;
}

}  // namespace steersum
