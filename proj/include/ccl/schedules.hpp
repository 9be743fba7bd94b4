#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ccl/config.hpp"

namespace ccl {

// Consistency weight ramp: lambda_max * exp(-5 (1 - e/ramp)^2), pinned to
// exactly 0 at e = 0 and to lambda_max from ramp_epochs on.
inline double ramp_up_weight(int epoch, const ConsistencyWeights& cfg) {
    if (epoch < 0) throw std::invalid_argument("ramp_up_weight: negative epoch");
    if (epoch == 0) return 0.0;
    if (epoch >= cfg.ramp_epochs) return cfg.lambda_max;
    const double u = 1.0 - static_cast<double>(epoch) / static_cast<double>(cfg.ramp_epochs);
    return cfg.lambda_max * std::exp(-5.0 * u * u);
}

// Cap on the filter-out probability: 1 - rho * e / E up to the threshold
// epoch, then a literal drop to 0 (the discontinuity at e = E is intentional).
inline double p_max_schedule(int epoch, double rho, int threshold_epoch) {
    if (epoch < 0) throw std::invalid_argument("p_max_schedule: negative epoch");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in (0,1)");
    if (threshold_epoch < 1) throw std::invalid_argument("p_max_schedule: threshold epoch must be >= 1");
    if (epoch > threshold_epoch) return 0.0;
    return 1.0 - rho * static_cast<double>(epoch) / static_cast<double>(threshold_epoch);
}

// Batch-max temperature from the active phase (the latest phase whose start
// is <= e); the ramp-down saturates after duration_epochs and the result is
// clamped to at least t_min.
inline double t_max_schedule(int epoch, const TemperatureConfig& cfg) {
    if (epoch < 0) throw std::invalid_argument("t_max_schedule: negative epoch");
    cfg.validate();
    const TemperaturePhase* active = &cfg.phases.front();
    for (const TemperaturePhase& p : cfg.phases) {
        if (p.start_epoch <= epoch) active = &p;
    }
    const double into = std::max(0.0, static_cast<double>(epoch - active->start_epoch));
    const double u = std::min(1.0, into / active->duration_epochs);
    return std::max(cfg.t_min, active->base_temp - active->temp_drop * u);
}

// Per-sample temperatures T_i = T_max * R_i / |B|, clamped below at t_min.
// The most uncertain sample (rank |B|) gets exactly max(t_min, T_max).
inline std::vector<double> per_sample_temperatures(const std::vector<int>& ranks, double t_max,
                                                   double t_min) {
    if (!(t_min > 0.0)) throw std::invalid_argument("per_sample_temperatures: t_min must be > 0");
    if (!(t_max >= t_min)) throw std::invalid_argument("per_sample_temperatures: t_max < t_min");
    const double batch = static_cast<double>(ranks.size());
    std::vector<double> temps(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        temps[i] = std::max(t_min, t_max * static_cast<double>(ranks[i]) / batch);
    }
    return temps;
}

}  // namespace ccl
