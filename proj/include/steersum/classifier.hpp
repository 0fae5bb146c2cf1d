#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "steersum/errors.hpp"
#include "steersum/matrix.hpp"
#include "steersum/simplex.hpp"
#include "steersum/vocab.hpp"

namespace steersum {

/// Political leaning of a text: left (-1), center (0), right (+1).
enum class Stance : int { Left = -1, Center = 0, Right = 1 };

inline int stance_value(Stance s) { return static_cast<int>(s); }

inline Stance stance_from_int(int v) {
    if (v < -1 || v > 1) throw DataError("stance label must be -1, 0 or +1");
    return static_cast<Stance>(v);
}

inline std::size_t stance_index(Stance s) { return static_cast<std::size_t>(stance_value(s) + 1); }

inline const char* stance_name(Stance s) {
    switch (s) {
        case Stance::Left: return "left";
        case Stance::Center: return "center";
        case Stance::Right: return "right";
    }
    return "center";
}

/// Behavior contract for any stance classifier pluggable into guided
/// decoding. `predict_proba` consumes row-stochastic simplex probabilities
/// so gradients can flow through discrete-looking inputs; `grad_logprob`
/// differentiates log p(target | softmax(logits)) with respect to the raw
/// logits; `classify` hard-labels a token sequence.
class StanceClassifier {
public:
    virtual ~StanceClassifier() = default;

    virtual std::array<double, 3> predict_proba(const Matrix<double>& probs) const = 0;
    virtual Matrix<double> grad_logprob(Stance target, const SimplexSequence& s) const = 0;
    virtual Stance classify(const std::vector<int>& tokens) const = 0;
};

/// Argmax over class probabilities with ties broken toward center.
inline Stance argmax_stance(const std::array<double, 3>& p) {
    // preference order under ties: center, then left, then right
    Stance best = Stance::Center;
    double best_p = p[stance_index(Stance::Center)];
    for (Stance s : {Stance::Left, Stance::Right}) {
        if (p[stance_index(s)] > best_p) {
            best_p = p[stance_index(s)];
            best = s;
        }
    }
    return best;
}

/// Desk-scale differentiable stance classifier: token embeddings, mean
/// pooling over positions, linear 3-class head. Runs in double end to end
/// so finite-difference checks are meaningful.
class ToyStanceClassifier : public StanceClassifier {
public:
    ToyStanceClassifier() = default;

    ToyStanceClassifier(const Vocabulary& vocab, int embed_dim, std::mt19937_64& rng)
        : vocab_size_(vocab.size()), dim_(embed_dim), pad_id_(vocab.pad()) {
        embed_ = Matrix<double>(static_cast<std::size_t>(vocab_size_), static_cast<std::size_t>(dim_));
        std::normal_distribution<double> dist(0.0, 0.1);
        for (auto& v : embed_.data) v = dist(rng);
        // zero-initialized head keeps label-permutation symmetry exact
        head_w_ = Matrix<double>(3, static_cast<std::size_t>(dim_), 0.0);
        head_b_ = Matrix<double>(1, 3, 0.0);
    }

    int vocab_size() const { return vocab_size_; }
    int embed_dim() const { return dim_; }
    double heldout_accuracy() const { return heldout_accuracy_; }

    std::array<double, 3> predict_proba(const Matrix<double>& probs) const override {
        const auto z = logits_from_probs(probs);
        return softmax3(z);
    }

    Matrix<double> grad_logprob(Stance target, const SimplexSequence& s) const override {
        const Matrix<double> probs = row_normalize(s);
        const auto z = logits_from_probs(probs);
        const auto p = softmax3(z);

        // d logp / dz = onehot(target) - p
        std::array<double, 3> dz{};
        for (std::size_t c = 0; c < 3; ++c) dz[c] = (c == stance_index(target) ? 1.0 : 0.0) - p[c];

        // pooled = mean of rows of X = P E; d/d pooled = W^T dz
        std::vector<double> dpool(static_cast<std::size_t>(dim_), 0.0);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t j = 0; j < static_cast<std::size_t>(dim_); ++j) dpool[j] += head_w_(c, j) * dz[c];

        const double inv_rows = probs.rows > 0 ? 1.0 / static_cast<double>(probs.rows) : 0.0;
        // dP = (1/L) dpool E^T per row, then softmax jacobian back to logits
        Matrix<double> grad(probs.rows, probs.cols);
        for (std::size_t i = 0; i < probs.rows; ++i) {
            double dot = 0.0;
            std::vector<double> dp(probs.cols);
            for (std::size_t v = 0; v < probs.cols; ++v) {
                double acc = 0.0;
                const double* e = embed_.row(v);
                for (std::size_t j = 0; j < static_cast<std::size_t>(dim_); ++j) acc += e[j] * dpool[j];
                dp[v] = acc * inv_rows;
                dot += dp[v] * probs(i, v);
            }
            for (std::size_t v = 0; v < probs.cols; ++v) grad(i, v) = probs(i, v) * (dp[v] - dot);
        }
        return grad;
    }

    Stance classify(const std::vector<int>& tokens) const override {
        const auto content = strip_pad(tokens);
        if (content.empty()) throw DataError("classify needs at least one non-pad token");
        Matrix<double> probs(content.size(), static_cast<std::size_t>(vocab_size_), 0.0);
        for (std::size_t i = 0; i < content.size(); ++i) {
            const int id = content[i];
            if (id < 0 || id >= vocab_size_) throw TokenError("token id out of range in classify");
            probs(i, static_cast<std::size_t>(id)) = 1.0;
        }
        return argmax_stance(predict_proba(probs));
    }

    // --- training ------------------------------------------------------

    struct TrainStats {
        double heldout_accuracy = 0.0;
        std::array<std::array<int, 3>, 3> confusion{};  // [true][pred]
    };

    /// Supervised training on one-hot encodings. Requires all three labels
    /// in the corpus; holds out a deterministic 20% slice for accuracy.
    static ToyStanceClassifier train(const std::vector<std::pair<std::vector<int>, Stance>>& corpus,
                                     const Vocabulary& vocab, int epochs, double lr, std::mt19937_64& rng,
                                     int embed_dim = 32, TrainStats* stats = nullptr) {
        bool seen[3] = {false, false, false};
        for (const auto& [toks, label] : corpus) {
            (void)toks;
            seen[stance_index(label)] = true;
        }
        if (!(seen[0] && seen[1] && seen[2])) throw DataError("classifier corpus must contain all three labels");

        ToyStanceClassifier clf(vocab, embed_dim, rng);

        std::vector<std::size_t> order(corpus.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        const std::size_t holdout = corpus.size() >= 10 ? corpus.size() / 5 : 0;
        const std::size_t train_n = corpus.size() - holdout;

        for (int epoch = 0; epoch < epochs; ++epoch) {
            std::shuffle(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n), rng);
            for (std::size_t oi = 0; oi < train_n; ++oi) {
                const auto& [tokens, label] = corpus[order[oi]];
                clf.sgd_step(tokens, label, lr);
            }
        }

        TrainStats local;
        if (holdout > 0) {
            int correct = 0;
            for (std::size_t oi = train_n; oi < corpus.size(); ++oi) {
                const auto& [tokens, label] = corpus[order[oi]];
                const Stance pred = clf.classify(tokens);
                local.confusion[stance_index(label)][stance_index(pred)]++;
                if (pred == label) ++correct;
            }
            local.heldout_accuracy = static_cast<double>(correct) / holdout;
        } else {
            local.heldout_accuracy = 1.0;
        }
        clf.heldout_accuracy_ = local.heldout_accuracy;
        if (stats) *stats = local;
        return clf;
    }

    // checkpoint plumbing
    const Matrix<double>& embedding() const { return embed_; }
    const Matrix<double>& head_weight() const { return head_w_; }
    const Matrix<double>& head_bias() const { return head_b_; }
    Matrix<double>& embedding() { return embed_; }
    Matrix<double>& head_weight() { return head_w_; }
    Matrix<double>& head_bias() { return head_b_; }
    void set_shape(int vocab_size, int dim, int pad_id) {
        vocab_size_ = vocab_size;
        dim_ = dim;
        pad_id_ = pad_id;
    }
    int pad_id() const { return pad_id_; }
    void set_heldout_accuracy(double a) { heldout_accuracy_ = a; }

private:
    std::vector<int> strip_pad(const std::vector<int>& tokens) const {
        std::vector<int> out;
        out.reserve(tokens.size());
        for (int t : tokens)
            if (t != pad_id_) out.push_back(t);
        return out;
    }

    std::array<double, 3> logits_from_probs(const Matrix<double>& probs) const {
        if (probs.cols != static_cast<std::size_t>(vocab_size_))
            throw ShapeError("classifier input width does not match vocabulary");
        std::vector<double> pooled(static_cast<std::size_t>(dim_), 0.0);
        const double inv_rows = probs.rows > 0 ? 1.0 / static_cast<double>(probs.rows) : 0.0;
        for (std::size_t i = 0; i < probs.rows; ++i) {
            const double* p = probs.row(i);
            for (std::size_t v = 0; v < probs.cols; ++v) {
                if (p[v] == 0.0) continue;
                const double* e = embed_.row(v);
                for (std::size_t j = 0; j < static_cast<std::size_t>(dim_); ++j) pooled[j] += p[v] * e[j] * inv_rows;
            }
        }
        std::array<double, 3> z{};
        for (std::size_t c = 0; c < 3; ++c) {
            double acc = head_b_(0, c);
            for (std::size_t j = 0; j < static_cast<std::size_t>(dim_); ++j) acc += head_w_(c, j) * pooled[j];
            z[c] = acc;
        }
        return z;
    }

    static std::array<double, 3> softmax3(const std::array<double, 3>& z) {
        const double mx = std::max({z[0], z[1], z[2]});
        std::array<double, 3> p{};
        double sum = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            p[c] = std::exp(z[c] - mx);
            sum += p[c];
        }
        for (auto& v : p) v /= sum;
        return p;
    }

    void sgd_step(const std::vector<int>& tokens, Stance label, double lr) {
        const auto content = strip_pad(tokens);
        if (content.empty()) return;
        std::vector<double> pooled(static_cast<std::size_t>(dim_), 0.0);
        const double inv = 1.0 / static_cast<double>(content.size());
        for (int id : content) {
            const double* e = embed_.row(static_cast<std::size_t>(id));
            for (std::size_t j = 0; j < pooled.size(); ++j) pooled[j] += e[j] * inv;
        }
        std::array<double, 3> z{};
        for (std::size_t c = 0; c < 3; ++c) {
            double acc = head_b_(0, c);
            for (std::size_t j = 0; j < pooled.size(); ++j) acc += head_w_(c, j) * pooled[j];
            z[c] = acc;
        }
        const auto p = softmax3(z);
        std::array<double, 3> dz{};
        for (std::size_t c = 0; c < 3; ++c) dz[c] = p[c] - (c == stance_index(label) ? 1.0 : 0.0);

        std::vector<double> dpool(pooled.size(), 0.0);
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t j = 0; j < pooled.size(); ++j) {
                dpool[j] += head_w_(c, j) * dz[c];
                head_w_(c, j) -= lr * dz[c] * pooled[j];
            }
            head_b_(0, c) -= lr * dz[c];
        }
        for (int id : content) {
            double* e = embed_.row(static_cast<std::size_t>(id));
            for (std::size_t j = 0; j < pooled.size(); ++j) e[j] -= lr * dpool[j] * inv;
        }
    }

    int vocab_size_ = 0;
    int dim_ = 0;
    int pad_id_ = 0;
    double heldout_accuracy_ = 0.0;
    Matrix<double> embed_;   // V x dim
    Matrix<double> head_w_;  // 3 x dim
    Matrix<double> head_b_;  // 1 x 3
};

inline ToyStanceClassifier train_toy_classifier(const std::vector<std::pair<std::vector<int>, Stance>>& corpus,
                                                const Vocabulary& vocab, int epochs, double lr,
                                                std::mt19937_64& rng, int embed_dim = 32,
                                                ToyStanceClassifier::TrainStats* stats = nullptr) {
    return ToyStanceClassifier::train(corpus, vocab, epochs, lr, rng, embed_dim, stats);
}

/// Hard stance label of a token sequence.
inline Stance f_bias(const StanceClassifier& clf, const std::vector<int>& tokens) {
    if (tokens.empty()) throw DataError("f_bias needs a non-empty token sequence");
    return clf.classify(tokens);
}

/// Central finite differences against grad_logprob; returns the max
/// relative error over coordinates whose analytic gradient is
/// meaningfully nonzero.
inline double grad_check(const StanceClassifier& clf, const SimplexSequence& s, Stance y, double h = 1e-4) {
    const Matrix<double> analytic = clf.grad_logprob(y, s);
    const auto logp = [&](const SimplexSequence& seq) {
        return std::log(clf.predict_proba(row_normalize(seq))[stance_index(y)]);
    };
    double worst = 0.0;
    SimplexSequence probe = s;
    for (std::size_t i = 0; i < s.length(); ++i) {
        for (std::size_t j = 0; j < s.vocab_size(); ++j) {
            const double a = analytic(i, j);
            if (std::abs(a) <= 1e-8) continue;
            const double orig = probe.logits(i, j);
            probe.logits(i, j) = orig + h;
            const double up = logp(probe);
            probe.logits(i, j) = orig - h;
            const double down = logp(probe);
            probe.logits(i, j) = orig;
            const double fd = (up - down) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - a) / std::abs(a));
        }
    }
    return worst;
}

}  // namespace steersum
