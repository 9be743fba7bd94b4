#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccl/tensor.hpp"

namespace ccl {

namespace detail {

// Stable softmax of one row at temperature t: max is subtracted before the
// exponent so low temperatures do not overflow.
inline void softmax_row(const double* z, std::size_t n, double t, double* out) {
    double m = z[0];
    for (std::size_t j = 1; j < n; ++j) m = std::max(m, z[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = std::exp((z[j] - m) / t);
        sum += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
}

}  // namespace detail

// Softmax of logits / T with one temperature per row.
inline Tensor temperature_softmax(const Tensor& logits, const std::vector<double>& temps) {
    if (temps.size() != logits.rows) {
        throw std::invalid_argument("temperature_softmax: need one temperature per row, got " +
                                    std::to_string(temps.size()) + " for " +
                                    std::to_string(logits.rows) + " rows");
    }
    for (double t : temps) {
        if (!(t > 0.0)) throw std::invalid_argument("temperature_softmax: non-positive temperature");
    }
    Tensor probs(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        detail::softmax_row(logits.row_ptr(i), logits.cols, temps[i], probs.row_ptr(i));
    }
    return probs;
}

inline Tensor temperature_softmax(const Tensor& logits, double t) {
    return temperature_softmax(logits, std::vector<double>(logits.rows, t));
}

// T = 1 case; same code path, so it is bitwise identical to
// temperature_softmax(logits, 1.0).
inline Tensor softmax(const Tensor& logits) { return temperature_softmax(logits, 1.0); }

struct CrossEntropyResult {
    double loss = 0.0;
    std::vector<double> grad_logits;  // probs - onehot(label)
};

// Cross-entropy of one probability row against an integer label. The gradient
// is taken wrt the logits that produced the row via softmax at T=1.
inline CrossEntropyResult cross_entropy(const Tensor& probs, std::size_t row, int label) {
    if (row >= probs.rows) throw std::invalid_argument("cross_entropy: row out of range");
    if (label < 0 || static_cast<std::size_t>(label) >= probs.cols) {
        throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                    " out of range [0, " + std::to_string(probs.cols) + ")");
    }
    CrossEntropyResult res;
    const double* p = probs.row_ptr(row);
    res.loss = -std::log(p[label]);
    res.grad_logits.assign(p, p + probs.cols);
    res.grad_logits[static_cast<std::size_t>(label)] -= 1.0;
    return res;
}

struct MseResult {
    std::vector<double> per_row;  // sum over columns of (p - q)^2
    Tensor grad_p;                // 2 (p - q)
};

inline MseResult mse_rows(const Tensor& p, const Tensor& q) {
    require_same_shape(p, q, "mse_rows");
    MseResult res;
    res.per_row.assign(p.rows, 0.0);
    res.grad_p = Tensor(p.rows, p.cols);
    for (std::size_t i = 0; i < p.rows; ++i) {
        const double* pr = p.row_ptr(i);
        const double* qr = q.row_ptr(i);
        double* gr = res.grad_p.row_ptr(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < p.cols; ++j) {
            const double d = pr[j] - qr[j];
            acc += d * d;
            gr[j] = 2.0 * d;
        }
        res.per_row[i] = acc;
    }
    return res;
}

}  // namespace ccl
