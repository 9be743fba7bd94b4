#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ccl/losses.hpp"
#include "ccl/mlp.hpp"
#include "ccl/rng.hpp"
#include "ccl/tensor.hpp"

namespace ccl {

// K probability matrices of shape |B| x C, one per stochastic pass.
using PredictionStack = std::vector<Tensor>;

// K stochastic forward passes with dropout active and fresh input noise per
// pass. Pass k draws from its own sub-stream mix_seed({seed, k}), so the
// passes are order-independent and may run in parallel without changing the
// result.
inline PredictionStack mc_predict(const MlpModel& teacher, const Tensor& inputs, int passes,
                                  double input_noise_sigma, std::uint64_t seed) {
    if (passes < 2) {
        throw std::invalid_argument("mc_predict: variance undefined (need at least 2 passes)");
    }
    PredictionStack stack;
    stack.reserve(static_cast<std::size_t>(passes));
    for (int k = 0; k < passes; ++k) {
        Perturbation pert(input_noise_sigma, true,
                          mix_seed({seed, static_cast<std::uint64_t>(k)}));
        stack.push_back(softmax(forward(teacher, inputs, pert).logits));
    }
    return stack;
}

// Per-sample predictive variance: the sum over classes of the across-pass
// population variance (divide by K) of the predicted probabilities.
// Accumulated with Welford's update.
inline std::vector<double> predictive_variance(const PredictionStack& stack) {
    if (stack.empty()) throw std::invalid_argument("predictive_variance: empty stack");
    const std::size_t n = stack[0].rows;
    const std::size_t c = stack[0].cols;
    for (const Tensor& slice : stack) {
        if (slice.rows != n || slice.cols != c) {
            throw std::invalid_argument("predictive_variance: ragged stack");
        }
    }
    std::vector<double> mean(n * c, 0.0);
    std::vector<double> m2(n * c, 0.0);
    double count = 0.0;
    for (const Tensor& slice : stack) {
        count += 1.0;
        for (std::size_t i = 0; i < n * c; ++i) {
            const double x = slice.data[i];
            const double delta = x - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (x - mean[i]);
        }
    }
    std::vector<double> pv(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += m2[r * c + j];
        pv[r] = acc / count;
    }
    return pv;
}

// Ascending certainty ranks: rank 1 is the smallest pv (most certain), rank
// |B| the largest. Ties go to the lower batch index.
inline std::vector<int> rank_by_uncertainty(const std::vector<double>& pv) {
    for (double v : pv) {
        if (!std::isfinite(v)) throw std::invalid_argument("rank_by_uncertainty: non-finite pv");
    }
    std::vector<std::size_t> order(pv.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&pv](std::size_t a, std::size_t b) { return pv[a] < pv[b]; });
    std::vector<int> ranks(pv.size(), 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        ranks[order[pos]] = static_cast<int>(pos) + 1;
    }
    return ranks;
}

struct UncertaintyReport {
    std::vector<double> pv;
    std::vector<int> ranks;
    PredictionStack stack;
};

inline UncertaintyReport estimate_uncertainty(const MlpModel& teacher, const Tensor& inputs,
                                              int passes, double input_noise_sigma,
                                              std::uint64_t seed) {
    UncertaintyReport report;
    report.stack = mc_predict(teacher, inputs, passes, input_noise_sigma, seed);
    report.pv = predictive_variance(report.stack);
    report.ranks = rank_by_uncertainty(report.pv);
    return report;
}

}  // namespace ccl
