#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ccl/config.hpp"
#include "ccl/rng.hpp"

namespace ccl {

// true = the sample participates in the consistency loss. Both filtering
// strategies are stored in this keep convention.
using KeepMask = std::vector<bool>;

// Keep the top-k most certain samples, k = ceil(beta * e) clamped to [1, |B|].
inline KeepMask hard_filter_mask(const std::vector<int>& ranks, int epoch, double beta) {
    if (epoch < 0) throw std::invalid_argument("hard_filter_mask: negative epoch");
    if (!(beta > 0.0)) throw std::invalid_argument("hard_filter_mask: beta must be > 0");
    const double raw = std::ceil(beta * static_cast<double>(epoch));
    long k = static_cast<long>(raw);
    k = std::max(1L, std::min(k, static_cast<long>(ranks.size())));
    KeepMask keep(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        keep[i] = ranks[i] <= k;
    }
    return keep;
}

// Filter-out probability for one sample: p_max * (rank - 1) / (|B| - 1).
// Rank 1 is never filtered; rank |B| is filtered with probability p_max.
inline double filter_out_probability(int rank, std::size_t batch, double p_max) {
    if (batch == 0) throw std::invalid_argument("filter_out_probability: empty batch");
    if (rank < 1 || static_cast<std::size_t>(rank) > batch) {
        throw std::invalid_argument("filter_out_probability: rank out of range");
    }
    if (p_max < 0.0 || p_max > 1.0) {
        throw std::invalid_argument("filter_out_probability: p_max must be in [0,1]");
    }
    if (batch == 1) return 0.0;
    return p_max * static_cast<double>(rank - 1) / static_cast<double>(batch - 1);
}

// keep_i ~ Bernoulli(1 - m_p_i) with m_p_i from filter_out_probability.
// Draws in batch order, one per sample. A singleton batch is always kept.
inline KeepMask prob_filter_mask(const std::vector<int>& ranks, double p_max, RngStream& rng) {
    KeepMask keep(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        const double m_p = filter_out_probability(ranks[i], ranks.size(), p_max);
        keep[i] = !rng.bernoulli(m_p);
    }
    return keep;
}

inline KeepMask combine_masks(const KeepMask& hard, const KeepMask& prob, FilterMode mode) {
    if (hard.size() != prob.size()) {
        throw std::invalid_argument("combine_masks: mask length mismatch");
    }
    switch (mode) {
        case FilterMode::hard: return hard;
        case FilterMode::probabilistic: return prob;
        case FilterMode::both: break;
    }
    KeepMask keep(hard.size());
    for (std::size_t i = 0; i < hard.size(); ++i) keep[i] = hard[i] && prob[i];
    return keep;
}

inline std::size_t kept_count(const KeepMask& keep) {
    std::size_t n = 0;
    for (bool b : keep) n += b ? 1 : 0;
    return n;
}

}  // namespace ccl
