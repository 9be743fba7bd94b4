#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccl {

// Dense row-major matrix of doubles; the single numeric carrier in the library.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // length rows * cols

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool empty() const { return data.empty(); }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

inline bool all_finite(const Tensor& t) {
    for (double v : t.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline void require_finite(const Tensor& t, const std::string& what) {
    if (!all_finite(t)) {
        throw std::runtime_error(what + ": tensor contains non-finite values");
    }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(what + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimensions differ, " + a.shape_str() +
                                    " * " + b.shape_str());
    }
    Tensor out(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

inline Tensor transposed(const Tensor& a) {
    Tensor out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            out(j, i) = a(i, j);
        }
    }
    return out;
}

}  // namespace ccl
