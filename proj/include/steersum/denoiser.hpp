#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "steersum/errors.hpp"
#include "steersum/matrix.hpp"
#include "steersum/schedule.hpp"
#include "steersum/simplex.hpp"
#include "steersum/transformer.hpp"
#include "steersum/vocab.hpp"

namespace steersum {

/// One (document, summary) pair, tokenized against the shared vocabulary.
struct SummarizationExample {
    std::string id;
    std::vector<int> document;
    std::vector<int> summary;
    std::optional<int> stance_label;  // -1 / 0 / +1 when annotated
};

struct TrainConfig {
    int training_steps = 2000;
    double learning_rate = 3e-4;
    int diffusion_steps = 100;  // T
    int max_target_length = 16;
    double k = 5.0;
    double self_cond_prob = 0.5;
    int batch_size = 16;
    std::uint64_t seed = 0;
    ScheduleKind schedule = ScheduleKind::Cosine;

    // backbone shape
    int max_len = 64;
    int width = 128;
    int layers = 4;
    int heads = 4;

    void validate() const {
        if (training_steps < 0) throw ConfigError("training_steps must be >= 0");
        if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
        if (diffusion_steps < 1) throw ConfigError("diffusion_steps must be >= 1");
        if (max_target_length < 1) throw ConfigError("max_target_length must be >= 1");
        if (k <= 0) throw ConfigError("k must be positive");
        if (self_cond_prob < 0 || self_cond_prob > 1) throw ConfigError("self_cond_prob must be in [0, 1]");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (max_len < 4 || width < 1 || layers < 1 || heads < 1) throw ConfigError("bad backbone shape");
    }
};

/// Concatenated training layout: [bos, document..., sep, summary..., eos, pad...].
/// The document is head-truncated to fit; the summary never is. The loss
/// mask is true exactly on summary-role positions (summary tokens and eos).
inline std::tuple<std::vector<int>, std::vector<Role>, std::vector<bool>> build_training_sequence(
    const SummarizationExample& ex, int l_max, const Vocabulary& vocab) {
    const int target_len = static_cast<int>(ex.summary.size());
    if (target_len + 3 > l_max)
        throw DataError("summary of example '" + ex.id + "' does not fit the sequence budget");
    const int doc_budget = l_max - 3 - target_len;
    const int doc_len = std::min<int>(doc_budget, static_cast<int>(ex.document.size()));

    std::vector<int> ids(static_cast<std::size_t>(l_max), vocab.pad());
    std::vector<Role> roles(static_cast<std::size_t>(l_max), Role::Pad);
    std::vector<bool> loss_mask(static_cast<std::size_t>(l_max), false);

    int pos = 0;
    ids[pos] = vocab.bos();
    roles[pos] = Role::Document;
    ++pos;
    for (int i = 0; i < doc_len; ++i, ++pos) {
        ids[pos] = ex.document[static_cast<std::size_t>(i)];
        roles[pos] = Role::Document;
    }
    ids[pos] = vocab.sep();
    roles[pos] = Role::Document;
    ++pos;
    for (int i = 0; i < target_len; ++i, ++pos) {
        ids[pos] = ex.summary[static_cast<std::size_t>(i)];
        roles[pos] = Role::Summary;
        loss_mask[pos] = true;
    }
    ids[pos] = vocab.eos();
    roles[pos] = Role::Summary;
    loss_mask[pos] = true;
    return {std::move(ids), std::move(roles), std::move(loss_mask)};
}

/// Elementwise average of the noisy state and the previous clean estimate.
inline SimplexSequence self_condition_mix(const SimplexSequence& s_t, const SimplexSequence& s_hat_prev) {
    if (!s_t.logits.same_shape(s_hat_prev.logits)) throw ShapeError("self_condition_mix: shapes disagree");
    SimplexSequence out = s_t;
    for (std::size_t i = 0; i < out.logits.data.size(); ++i)
        out.logits.data[i] = 0.5 * (s_t.logits.data[i] + s_hat_prev.logits.data[i]);
    return out;
}

struct LossResult {
    double loss = 0.0;
    bool empty_mask = false;  // warning flag: no masked positions
};

/// Mean cross entropy of row-normalized predictions against target ids,
/// restricted to masked positions.
inline LossResult training_loss(const SimplexSequence& pred, const std::vector<int>& targets,
                                const std::vector<bool>& loss_mask) {
    if (targets.size() != pred.length() || loss_mask.size() != pred.length())
        throw ShapeError("training_loss: targets/mask length must equal sequence length");
    const Matrix<double> probs = row_normalize(pred);
    double total = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < pred.length(); ++i) {
        if (!loss_mask[i]) continue;
        const int tgt = targets[i];
        if (tgt < 0 || static_cast<std::size_t>(tgt) >= pred.vocab_size())
            throw TokenError("target id out of range in training_loss");
        total += -std::log(probs(i, static_cast<std::size_t>(tgt)));
        ++n;
    }
    if (n == 0) return {0.0, true};
    return {total / n, false};
}

/// d(loss)/d(pred logits): (softmax - onehot) / n on masked rows, 0 elsewhere.
inline Matrix<double> training_loss_grad(const SimplexSequence& pred, const std::vector<int>& targets,
                                         const std::vector<bool>& loss_mask) {
    if (targets.size() != pred.length() || loss_mask.size() != pred.length())
        throw ShapeError("training_loss_grad: targets/mask length must equal sequence length");
    const Matrix<double> probs = row_normalize(pred);
    Matrix<double> grad(pred.length(), pred.vocab_size(), 0.0);
    int n = 0;
    for (std::size_t i = 0; i < pred.length(); ++i)
        if (loss_mask[i]) ++n;
    if (n == 0) return grad;
    const double inv = 1.0 / n;
    for (std::size_t i = 0; i < pred.length(); ++i) {
        if (!loss_mask[i]) continue;
        for (std::size_t j = 0; j < pred.vocab_size(); ++j) grad(i, j) = probs(i, j) * inv;
        grad(i, static_cast<std::size_t>(targets[i])) -= inv;
    }
    return grad;
}

/// Non-autoregressive denoiser: maps a (row-normalized simplex, timestep)
/// pair to predicted clean logits of the same shape. The simplex enters the
/// network as a soft embedding (probabilities times the token embedding
/// matrix); the timestep enters as a sinusoidal code of t/T added to every
/// position.
template <class Real>
class DenoiserModel {
public:
    DenoiserModel() = default;

    DenoiserModel(int vocab_size, const TrainConfig& cfg, std::mt19937_64& rng) : vocab_size_(vocab_size), cfg_(cfg) {
        cfg_.validate();
        token_emb_.resize(static_cast<std::size_t>(vocab_size), static_cast<std::size_t>(cfg.width));
        token_emb_.init_normal(rng, 0.02);
        pos_emb_.resize(static_cast<std::size_t>(cfg.max_len), static_cast<std::size_t>(cfg.width));
        pos_emb_.init_normal(rng, 0.02);
        encoder_.init(static_cast<std::size_t>(cfg.width), static_cast<std::size_t>(cfg.layers),
                      static_cast<std::size_t>(cfg.heads), static_cast<std::size_t>(4 * cfg.width), rng);
        out_head_.init(static_cast<std::size_t>(cfg.width), static_cast<std::size_t>(vocab_size), rng);
    }

    int vocab_size() const { return vocab_size_; }
    int max_len() const { return cfg_.max_len; }
    int t_max() const { return cfg_.diffusion_steps; }
    const TrainConfig& config() const { return cfg_; }

    std::vector<Param<Real>*> params() {
        std::vector<Param<Real>*> out = {&token_emb_, &pos_emb_};
        for (auto& l : encoder_.layers) {
            out.push_back(&l.ln1.gain);
            out.push_back(&l.ln1.bias);
            out.push_back(&l.attn.wq.weight);
            out.push_back(&l.attn.wq.bias);
            out.push_back(&l.attn.wk.weight);
            out.push_back(&l.attn.wk.bias);
            out.push_back(&l.attn.wv.weight);
            out.push_back(&l.attn.wv.bias);
            out.push_back(&l.attn.wo.weight);
            out.push_back(&l.attn.wo.bias);
            out.push_back(&l.ln2.gain);
            out.push_back(&l.ln2.bias);
            out.push_back(&l.ffn.up.weight);
            out.push_back(&l.ffn.up.bias);
            out.push_back(&l.ffn.down.weight);
            out.push_back(&l.ffn.down.bias);
        }
        out.push_back(&encoder_.final_ln.gain);
        out.push_back(&encoder_.final_ln.bias);
        out.push_back(&out_head_.weight);
        out.push_back(&out_head_.bias);
        return out;
    }

    /// Inference-mode prediction of clean logits. Deterministic for fixed
    /// weights and inputs. `t_total` defaults to the training-time T so a
    /// decoder running a different step count can rescale the conditioning.
    SimplexSequence predict(const SimplexSequence& s_t, int t, int t_total = -1) const {
        Matrix<Real> logits = const_cast<DenoiserModel*>(this)->run(s_t, t, t_total, /*cache=*/false);
        return SimplexSequence(logits.template cast<double>(), s_t.k, s_t.roles);
    }

    /// Training-mode forward; caches activations for backward().
    Matrix<Real> forward_train(const SimplexSequence& s_t, int t) { return run(s_t, t, -1, /*cache=*/true); }

    /// Backpropagates d(loss)/d(output logits) into parameter gradients.
    void backward(const Matrix<Real>& dlogits) {
        Matrix<Real> dh = out_head_.backward(dlogits);
        Matrix<Real> dx = encoder_.backward(dh);
        // soft embedding: X = P E, so dE += P^T dX
        matmul_at_b_accum(cached_probs_, dx, token_emb_.g);
        for (std::size_t i = 0; i < dx.rows; ++i) {
            Real* g = pos_emb_.g.row(i);
            const Real* d = dx.row(i);
            for (std::size_t j = 0; j < dx.cols; ++j) g[j] += d[j];
        }
    }

    Matrix<Real>& token_embedding() { return token_emb_.w; }

private:
    Matrix<Real> run(const SimplexSequence& s_t, int t, int t_total, bool cache) {
        const int total = t_total > 0 ? t_total : cfg_.diffusion_steps;
        if (t < 0 || t > total) throw ScheduleError("predict timestep outside [0, T]");
        if (s_t.length() > static_cast<std::size_t>(cfg_.max_len))
            throw ShapeError("sequence length exceeds model maximum");
        if (s_t.vocab_size() != static_cast<std::size_t>(vocab_size_))
            throw ShapeError("sequence vocabulary width does not match model");

        Matrix<Real> probs = s_t.logits.template cast<Real>();
        if (!all_finite(probs)) throw NumericError("non-finite logits in predict");
        probs = softmax_rows(probs);
        Matrix<Real> x = matmul(probs, token_emb_.w);

        const auto time_code = timestep_code(static_cast<double>(t) / total, static_cast<std::size_t>(cfg_.width));
        for (std::size_t i = 0; i < x.rows; ++i) {
            Real* row = x.row(i);
            const Real* pos = pos_emb_.w.row(i);
            for (std::size_t j = 0; j < x.cols; ++j) row[j] += pos[j] + time_code[j];
        }
        if (cache) cached_probs_ = probs;

        Matrix<Real> h = encoder_.forward(x, cache);
        return out_head_.forward(h, cache);
    }

    static std::vector<Real> timestep_code(double u, std::size_t width) {
        std::vector<Real> code(width);
        const std::size_t half = width / 2;
        for (std::size_t i = 0; i < half; ++i) {
            const double freq = std::pow(10000.0, static_cast<double>(i) / std::max<std::size_t>(1, half));
            code[2 * i] = static_cast<Real>(std::sin(u * freq));
            code[2 * i + 1] = static_cast<Real>(std::cos(u * freq));
        }
        if (width % 2 == 1) code[width - 1] = static_cast<Real>(std::sin(u));
        return code;
    }

    int vocab_size_ = 0;
    TrainConfig cfg_;
    Param<Real> token_emb_;  // V x d
    Param<Real> pos_emb_;    // L_max x d
    Encoder<Real> encoder_;
    Linear<Real> out_head_;  // d -> V
    Matrix<Real> cached_probs_;
};

struct TrainLogEntry {
    int step;
    double loss;
};

using TrainLog = std::vector<TrainLogEntry>;

/// Diffusion training loop. Per step: sample a batch, draw t per element,
/// noise the summary positions, optionally run a no-gradient prediction and
/// mix it in (self-conditioning), then backpropagate the masked cross
/// entropy of the learned prediction.
///
/// Batch assembly runs in parallel over per-thread model clones; the master
/// weights have a single writer. Element randomness is derived from
/// (seed, step, element), so data and losses do not depend on scheduling.
template <class Real = float>
DenoiserModel<Real> train_denoiser(const std::vector<SummarizationExample>& corpus, const TrainConfig& cfg,
                                   const Vocabulary& vocab, std::mt19937_64& rng, TrainLog* log = nullptr) {
    cfg.validate();
    if (corpus.empty()) throw DataError("training corpus is empty");

    DenoiserModel<Real> model(vocab.size(), cfg, rng);
    if (cfg.training_steps == 0) return model;

    const NoiseSchedule sched = make_schedule(cfg.diffusion_steps, cfg.schedule);
    AdamOptimizer<Real> opt(model.params(), cfg.learning_rate, cfg.training_steps);
    const std::uint64_t run_seed = rng();

    int n_workers = 1;
#ifdef _OPENMP
    n_workers = std::min(omp_get_max_threads(), cfg.batch_size);
#endif
    std::vector<DenoiserModel<Real>> workers(static_cast<std::size_t>(n_workers), model);

    for (int step = 0; step < cfg.training_steps; ++step) {
        opt.zero_grad();
        for (auto& w : workers) {
            auto master = model.params();
            auto clone = w.params();
            for (std::size_t p = 0; p < master.size(); ++p) {
                clone[p]->w.data = master[p]->w.data;
                clone[p]->zero_grad();
            }
        }

        std::vector<double> losses(static_cast<std::size_t>(cfg.batch_size), 0.0);
        std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(static) num_threads(n_workers)
        for (int b = 0; b < cfg.batch_size; ++b) {
            int tid = 0;
#ifdef _OPENMP
            tid = omp_get_thread_num();
#endif
            try {
                DenoiserModel<Real>& worker = workers[static_cast<std::size_t>(tid)];
                std::mt19937_64 elem_rng(
                    splitmix64(run_seed ^ splitmix64(static_cast<std::uint64_t>(step) * 0x10001ull + b)));
                std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
                std::uniform_int_distribution<int> draw_t(1, cfg.diffusion_steps);
                std::uniform_real_distribution<double> unit(0.0, 1.0);

                const auto& ex = corpus[pick(elem_rng)];
                auto [ids, roles, loss_mask] = build_training_sequence(ex, cfg.max_len, vocab);
                SimplexSequence s0 = logits_initialize(ids, cfg.k, vocab);
                s0.roles = roles;

                std::vector<bool> noise_mask(roles.size());
                for (std::size_t i = 0; i < roles.size(); ++i) noise_mask[i] = roles[i] == Role::Summary;

                const int t = draw_t(elem_rng);
                SimplexSequence s_t = forward_diffuse(s0, t, sched, elem_rng, noise_mask);

                if (unit(elem_rng) < cfg.self_cond_prob) {
                    const SimplexSequence est = worker.predict(s_t, t);
                    SimplexSequence mixed = self_condition_mix(s_t, est);
                    // context stays anchored: only summary rows take the mix
                    for (std::size_t i = 0; i < roles.size(); ++i) {
                        if (roles[i] == Role::Summary) continue;
                        for (std::size_t j = 0; j < s_t.vocab_size(); ++j) mixed.logits(i, j) = s_t.logits(i, j);
                    }
                    s_t = std::move(mixed);
                }

                Matrix<Real> pred = worker.forward_train(s_t, t);
                SimplexSequence pred_seq(pred.template cast<double>(), cfg.k, roles);
                const LossResult lr = training_loss(pred_seq, ids, loss_mask);
                losses[static_cast<std::size_t>(b)] = lr.loss;

                Matrix<double> dloss = training_loss_grad(pred_seq, ids, loss_mask);
                scale_inplace(dloss, 1.0 / cfg.batch_size);
                worker.backward(dloss.template cast<Real>());
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);

        auto master = model.params();
        for (auto& w : workers) {
            auto clone = w.params();
            for (std::size_t p = 0; p < master.size(); ++p) add_inplace(master[p]->g, clone[p]->g);
        }

        double batch_loss = 0.0;
        for (const double l : losses) batch_loss += l;
        batch_loss /= cfg.batch_size;
        if (!std::isfinite(batch_loss))
            throw TrainingDivergedError("non-finite loss at step " + std::to_string(step));
        if (log) log->push_back({step, batch_loss});
        opt.step();
    }
    return model;
}

}  // namespace steersum
