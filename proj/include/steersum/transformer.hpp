#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "steersum/errors.hpp"
#include "steersum/matrix.hpp"

namespace steersum {

/// Learnable tensor plus its gradient accumulator.
template <class Real>
struct Param {
    Matrix<Real> w;
    Matrix<Real> g;

    void resize(std::size_t rows, std::size_t cols) {
        w = Matrix<Real>(rows, cols, Real(0));
        g = Matrix<Real>(rows, cols, Real(0));
    }

    void zero_grad() { g.fill(Real(0)); }

    void init_normal(std::mt19937_64& rng, double std) {
        std::normal_distribution<double> dist(0.0, std);
        for (auto& v : w.data) v = static_cast<Real>(dist(rng));
    }
};

template <class Real>
struct Linear {
    Param<Real> weight;  // in x out
    Param<Real> bias;    // 1 x out
    Matrix<Real> cached_input;

    void init(std::size_t in, std::size_t out, std::mt19937_64& rng, double std = 0.02) {
        weight.resize(in, out);
        bias.resize(1, out);
        weight.init_normal(rng, std);
    }

    Matrix<Real> forward(const Matrix<Real>& x, bool cache) {
        Matrix<Real> y = matmul(x, weight.w);
        for (std::size_t i = 0; i < y.rows; ++i) {
            Real* row = y.row(i);
            for (std::size_t j = 0; j < y.cols; ++j) row[j] += bias.w(0, j);
        }
        if (cache) cached_input = x;
        return y;
    }

    Matrix<Real> backward(const Matrix<Real>& dy) {
        matmul_at_b_accum(cached_input, dy, weight.g);
        for (std::size_t i = 0; i < dy.rows; ++i)
            for (std::size_t j = 0; j < dy.cols; ++j) bias.g(0, j) += dy(i, j);
        return matmul_a_bt(dy, weight.w);
    }
};

template <class Real>
struct LayerNorm {
    Param<Real> gain;  // 1 x d
    Param<Real> bias;  // 1 x d
    Matrix<Real> cached_norm;
    std::vector<Real> cached_inv_std;
    static constexpr Real kEps = Real(1e-5);

    void init(std::size_t d) {
        gain.resize(1, d);
        bias.resize(1, d);
        gain.w.fill(Real(1));
    }

    Matrix<Real> forward(const Matrix<Real>& x, bool cache) {
        Matrix<Real> out(x.rows, x.cols);
        Matrix<Real> norm(x.rows, x.cols);
        std::vector<Real> inv_std(x.rows);
        const auto d = x.cols;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const Real* in = x.row(i);
            Real mean(0);
            for (std::size_t j = 0; j < d; ++j) mean += in[j];
            mean /= static_cast<Real>(d);
            Real var(0);
            for (std::size_t j = 0; j < d; ++j) {
                const Real c = in[j] - mean;
                var += c * c;
            }
            var /= static_cast<Real>(d);
            const Real istd = Real(1) / std::sqrt(var + kEps);
            inv_std[i] = istd;
            Real* n = norm.row(i);
            Real* o = out.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                n[j] = (in[j] - mean) * istd;
                o[j] = n[j] * gain.w(0, j) + bias.w(0, j);
            }
        }
        if (cache) {
            cached_norm = std::move(norm);
            cached_inv_std = std::move(inv_std);
        }
        return out;
    }

    Matrix<Real> backward(const Matrix<Real>& dy) {
        const auto d = dy.cols;
        Matrix<Real> dx(dy.rows, dy.cols);
        for (std::size_t i = 0; i < dy.rows; ++i) {
            const Real* g = dy.row(i);
            const Real* n = cached_norm.row(i);
            Real sum_dn(0), sum_dn_n(0);
            for (std::size_t j = 0; j < d; ++j) {
                const Real dn = g[j] * gain.w(0, j);
                sum_dn += dn;
                sum_dn_n += dn * n[j];
                gain.g(0, j) += g[j] * n[j];
                bias.g(0, j) += g[j];
            }
            const Real inv_d = Real(1) / static_cast<Real>(d);
            Real* o = dx.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                const Real dn = g[j] * gain.w(0, j);
                o[j] = cached_inv_std[i] * (dn - sum_dn * inv_d - n[j] * sum_dn_n * inv_d);
            }
        }
        return dx;
    }
};

template <class Real>
inline Real gelu(Real x) {
    return Real(0.5) * x * (Real(1) + std::erf(x / Real(M_SQRT2)));
}

template <class Real>
inline Real gelu_grad(Real x) {
    const Real cdf = Real(0.5) * (Real(1) + std::erf(x / Real(M_SQRT2)));
    const Real pdf = std::exp(Real(-0.5) * x * x) / Real(std::sqrt(2.0 * M_PI));
    return cdf + x * pdf;
}

template <class Real>
struct FeedForward {
    Linear<Real> up;
    Linear<Real> down;
    Matrix<Real> cached_pre;

    void init(std::size_t d, std::size_t hidden, std::mt19937_64& rng) {
        up.init(d, hidden, rng);
        down.init(hidden, d, rng);
    }

    Matrix<Real> forward(const Matrix<Real>& x, bool cache) {
        Matrix<Real> h = up.forward(x, cache);
        if (cache) cached_pre = h;
        for (auto& v : h.data) v = gelu(v);
        return down.forward(h, cache);
    }

    Matrix<Real> backward(const Matrix<Real>& dy) {
        Matrix<Real> dh = down.backward(dy);
        for (std::size_t i = 0; i < dh.data.size(); ++i) dh.data[i] *= gelu_grad(cached_pre.data[i]);
        return up.backward(dh);
    }
};

/// Bidirectional multi-head self-attention; the canvas is refined as a
/// whole, so no causal mask exists anywhere.
template <class Real>
struct SelfAttention {
    std::size_t dim = 0;
    std::size_t heads = 0;
    Linear<Real> wq, wk, wv, wo;
    Matrix<Real> cached_q, cached_k, cached_v;
    std::vector<Matrix<Real>> cached_attn;  // one L x L matrix per head

    void init(std::size_t d, std::size_t n_heads, std::mt19937_64& rng) {
        if (d % n_heads != 0) throw ConfigError("embedding width must divide evenly into heads");
        dim = d;
        heads = n_heads;
        wq.init(d, d, rng);
        wk.init(d, d, rng);
        wv.init(d, d, rng);
        wo.init(d, d, rng);
    }

    Matrix<Real> forward(const Matrix<Real>& x, bool cache) {
        const std::size_t L = x.rows;
        const std::size_t hd = dim / heads;
        const Real scale = Real(1) / std::sqrt(static_cast<Real>(hd));
        Matrix<Real> q = wq.forward(x, cache);
        Matrix<Real> k = wk.forward(x, cache);
        Matrix<Real> v = wv.forward(x, cache);

        Matrix<Real> ctx(L, dim, Real(0));
        std::vector<Matrix<Real>> attn(cache ? heads : 0);
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * hd;
            Matrix<Real> scores(L, L);
            for (std::size_t i = 0; i < L; ++i) {
                const Real* qi = q.row(i) + off;
                for (std::size_t j = 0; j < L; ++j) {
                    const Real* kj = k.row(j) + off;
                    Real acc(0);
                    for (std::size_t c = 0; c < hd; ++c) acc += qi[c] * kj[c];
                    scores(i, j) = acc * scale;
                }
            }
            Matrix<Real> a = softmax_rows(scores);
            for (std::size_t i = 0; i < L; ++i) {
                Real* out = ctx.row(i) + off;
                const Real* ai = a.row(i);
                for (std::size_t j = 0; j < L; ++j) {
                    const Real w = ai[j];
                    const Real* vj = v.row(j) + off;
                    for (std::size_t c = 0; c < hd; ++c) out[c] += w * vj[c];
                }
            }
            if (cache) attn[h] = std::move(a);
        }
        if (cache) {
            cached_q = std::move(q);
            cached_k = std::move(k);
            cached_v = std::move(v);
            cached_attn = std::move(attn);
        }
        return wo.forward(ctx, cache);
    }

    Matrix<Real> backward(const Matrix<Real>& dy) {
        const std::size_t L = dy.rows;
        const std::size_t hd = dim / heads;
        const Real scale = Real(1) / std::sqrt(static_cast<Real>(hd));
        Matrix<Real> dctx = wo.backward(dy);

        Matrix<Real> dq(L, dim, Real(0)), dk(L, dim, Real(0)), dv(L, dim, Real(0));
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * hd;
            const Matrix<Real>& a = cached_attn[h];

            // dA = dctx_h V_h^T; dV_h = A^T dctx_h
            Matrix<Real> da(L, L, Real(0));
            for (std::size_t i = 0; i < L; ++i) {
                const Real* dci = dctx.row(i) + off;
                for (std::size_t j = 0; j < L; ++j) {
                    const Real* vj = cached_v.row(j) + off;
                    Real acc(0);
                    for (std::size_t c = 0; c < hd; ++c) acc += dci[c] * vj[c];
                    da(i, j) = acc;
                    const Real w = a(i, j);
                    Real* dvj = dv.row(j) + off;
                    for (std::size_t c = 0; c < hd; ++c) dvj[c] += w * dci[c];
                }
            }

            // softmax rows backward: dS = A o (dA - rowsum(dA o A))
            for (std::size_t i = 0; i < L; ++i) {
                const Real* ai = a.row(i);
                Real* dai = da.row(i);
                Real dot(0);
                for (std::size_t j = 0; j < L; ++j) dot += dai[j] * ai[j];
                for (std::size_t j = 0; j < L; ++j) dai[j] = ai[j] * (dai[j] - dot);
            }

            // dQ_h = dS K_h * scale; dK_h = dS^T Q_h * scale
            for (std::size_t i = 0; i < L; ++i) {
                const Real* dsi = da.row(i);
                Real* dqi = dq.row(i) + off;
                const Real* qi = cached_q.row(i) + off;
                for (std::size_t j = 0; j < L; ++j) {
                    const Real s = dsi[j] * scale;
                    if (s == Real(0)) continue;
                    const Real* kj = cached_k.row(j) + off;
                    Real* dkj = dk.row(j) + off;
                    for (std::size_t c = 0; c < hd; ++c) {
                        dqi[c] += s * kj[c];
                        dkj[c] += s * qi[c];
                    }
                }
            }
        }

        Matrix<Real> dx = wq.backward(dq);
        add_inplace(dx, wk.backward(dk));
        add_inplace(dx, wv.backward(dv));
        return dx;
    }
};

/// Pre-norm encoder block: x + attn(ln1(x)), then + ffn(ln2(.)).
template <class Real>
struct EncoderLayer {
    LayerNorm<Real> ln1, ln2;
    SelfAttention<Real> attn;
    FeedForward<Real> ffn;

    void init(std::size_t d, std::size_t n_heads, std::size_t ffn_hidden, std::mt19937_64& rng) {
        ln1.init(d);
        ln2.init(d);
        attn.init(d, n_heads, rng);
        ffn.init(d, ffn_hidden, rng);
    }

    Matrix<Real> forward(const Matrix<Real>& x, bool cache) {
        Matrix<Real> a = attn.forward(ln1.forward(x, cache), cache);
        add_inplace(a, x);
        Matrix<Real> f = ffn.forward(ln2.forward(a, cache), cache);
        add_inplace(f, a);
        return f;
    }

    Matrix<Real> backward(const Matrix<Real>& dy) {
        Matrix<Real> da = ln2.backward(ffn.backward(dy));
        add_inplace(da, dy);
        Matrix<Real> dx = ln1.backward(attn.backward(da));
        add_inplace(dx, da);
        return dx;
    }
};

template <class Real>
struct Encoder {
    std::vector<EncoderLayer<Real>> layers;
    LayerNorm<Real> final_ln;

    void init(std::size_t d, std::size_t n_layers, std::size_t n_heads, std::size_t ffn_hidden,
              std::mt19937_64& rng) {
        layers.resize(n_layers);
        for (auto& l : layers) l.init(d, n_heads, ffn_hidden, rng);
        final_ln.init(d);
    }

    Matrix<Real> forward(const Matrix<Real>& x, bool cache) {
        Matrix<Real> h = x;
        for (auto& l : layers) h = l.forward(h, cache);
        return final_ln.forward(h, cache);
    }

    Matrix<Real> backward(const Matrix<Real>& dy) {
        Matrix<Real> d = final_ln.backward(dy);
        for (auto it = layers.rbegin(); it != layers.rend(); ++it) d = it->backward(d);
        return d;
    }
};

/// Adam with linear warmup and global-norm gradient clipping.
template <class Real>
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Param<Real>*> params, double lr, int total_steps, double warmup_frac = 0.01,
                  double clip_norm = 1.0)
        : params_(std::move(params)), lr_(lr), clip_norm_(clip_norm) {
        warmup_steps_ = std::max(1, static_cast<int>(total_steps * warmup_frac));
        for (auto* p : params_) {
            m_.emplace_back(p->w.rows, p->w.cols, Real(0));
            v_.emplace_back(p->w.rows, p->w.cols, Real(0));
        }
    }

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

    double grad_norm() const {
        double sq = 0.0;
        for (const auto* p : params_)
            for (const auto g : p->g.data) sq += static_cast<double>(g) * static_cast<double>(g);
        return std::sqrt(sq);
    }

    void step() {
        ++t_;
        const double norm = grad_norm();
        const double clip = (clip_norm_ > 0.0 && norm > clip_norm_) ? clip_norm_ / norm : 1.0;
        const double warm = t_ <= warmup_steps_ ? static_cast<double>(t_) / warmup_steps_ : 1.0;
        const double lr = lr_ * warm;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& w = params_[k]->w.data;
            auto& g = params_[k]->g.data;
            auto& m = m_[k].data;
            auto& v = v_[k].data;
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double gi = static_cast<double>(g[i]) * clip;
                const double mi = beta1_ * static_cast<double>(m[i]) + (1.0 - beta1_) * gi;
                const double vi = beta2_ * static_cast<double>(v[i]) + (1.0 - beta2_) * gi * gi;
                m[i] = static_cast<Real>(mi);
                v[i] = static_cast<Real>(vi);
                w[i] -= static_cast<Real>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps_));
            }
        }
    }

private:
    std::vector<Param<Real>*> params_;
    std::vector<Matrix<Real>> m_, v_;
    double lr_;
    double clip_norm_;
    int warmup_steps_ = 1;
    long long t_ = 0;
    static constexpr double beta1_ = 0.9;
    static constexpr double beta2_ = 0.999;
    static constexpr double eps_ = 1e-8;
};

}  // namespace steersum
