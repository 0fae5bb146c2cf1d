#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "steersum/errors.hpp"

namespace steersum {

/// Dense row-major matrix. The whole library runs on this one type;
/// model internals instantiate it with float, domain-level simplex state
/// and the toy classifier use double.
template <class Real>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Real> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, Real fill = Real(0)) : rows(r), cols(c), data(r * c, fill) {}

    Real& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const Real& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    Real* row(std::size_t i) { return data.data() + i * cols; }
    const Real* row(std::size_t i) const { return data.data() + i * cols; }

    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }

    void fill(Real v) { std::fill(data.begin(), data.end(), v); }

    template <class Other>
    Matrix<Other> cast() const {
        Matrix<Other> out(rows, cols);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<Other>(data[i]);
        return out;
    }
};

// threading pays only for matmuls big enough to amortize the fork
inline constexpr std::size_t kParallelProducts = 1500000;

// out = a * b. Each output element is a sequential dot product, so the
// result is bit-identical regardless of thread count.
template <class Real>
void matmul(const Matrix<Real>& a, const Matrix<Real>& b, Matrix<Real>& out) {
    if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions disagree");
    out.rows = a.rows;
    out.cols = b.cols;
    out.data.assign(a.rows * b.cols, Real(0));
#pragma omp parallel for schedule(static) if (a.rows * a.cols * b.cols > kParallelProducts)
    for (long long ii = 0; ii < static_cast<long long>(a.rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        Real* out_row = out.row(i);
        const Real* a_row = a.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const Real av = a_row[k];
            if (av == Real(0)) continue;
            const Real* b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += av * b_row[j];
        }
    }
}

template <class Real>
Matrix<Real> matmul(const Matrix<Real>& a, const Matrix<Real>& b) {
    Matrix<Real> out;
    matmul(a, b, out);
    return out;
}

// out += a^T * b (parameter-gradient accumulation, no temporaries).
template <class Real>
void matmul_at_b_accum(const Matrix<Real>& a, const Matrix<Real>& b, Matrix<Real>& out) {
    if (a.rows != b.rows) throw ShapeError("matmul_at_b: row counts disagree");
    if (out.rows != a.cols || out.cols != b.cols) throw ShapeError("matmul_at_b: bad output shape");
    for (std::size_t k = 0; k < a.rows; ++k) {
        const Real* a_row = a.row(k);
        const Real* b_row = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const Real av = a_row[i];
            if (av == Real(0)) continue;
            Real* out_row = out.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += av * b_row[j];
        }
    }
}

// out = a^T * b (parameter-gradient shape).
template <class Real>
Matrix<Real> matmul_at_b(const Matrix<Real>& a, const Matrix<Real>& b) {
    Matrix<Real> out(a.cols, b.cols, Real(0));
    matmul_at_b_accum(a, b, out);
    return out;
}

// out = a * b^T.
template <class Real>
Matrix<Real> matmul_a_bt(const Matrix<Real>& a, const Matrix<Real>& b) {
    if (a.cols != b.cols) throw ShapeError("matmul_a_bt: column counts disagree");
    Matrix<Real> out(a.rows, b.rows, Real(0));
#pragma omp parallel for schedule(static) if (a.rows * a.cols * b.rows > kParallelProducts)
    for (long long ii = 0; ii < static_cast<long long>(a.rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const Real* a_row = a.row(i);
        Real* out_row = out.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const Real* b_row = b.row(j);
            Real acc(0);
            for (std::size_t k = 0; k < a.cols; ++k) acc += a_row[k] * b_row[k];
            out_row[j] = acc;
        }
    }
    return out;
}

template <class Real>
void add_inplace(Matrix<Real>& a, const Matrix<Real>& b) {
    if (!a.same_shape(b)) throw ShapeError("add: shapes disagree");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

template <class Real>
void scale_inplace(Matrix<Real>& a, Real s) {
    for (auto& v : a.data) v *= s;
}

/// Numerically stable per-row softmax.
template <class Real>
Matrix<Real> softmax_rows(const Matrix<Real>& x) {
    Matrix<Real> out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const Real* in = x.row(i);
        Real* o = out.row(i);
        Real mx = in[0];
        for (std::size_t j = 1; j < x.cols; ++j) mx = std::max(mx, in[j]);
        Real sum(0);
        for (std::size_t j = 0; j < x.cols; ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        const Real inv = Real(1) / sum;
        for (std::size_t j = 0; j < x.cols; ++j) o[j] *= inv;
    }
    return out;
}

template <class Real>
bool all_finite(const Matrix<Real>& x) {
    for (const auto v : x.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace steersum
