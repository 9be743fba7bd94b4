#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ccl {

enum class FilterMode { hard, probabilistic, both };

inline std::string to_string(FilterMode m) {
    switch (m) {
        case FilterMode::hard: return "hard";
        case FilterMode::probabilistic: return "probabilistic";
        case FilterMode::both: return "both";
    }
    return "?";
}

inline FilterMode parse_filter_mode(const std::string& s) {
    if (s == "hard") return FilterMode::hard;
    if (s == "probabilistic") return FilterMode::probabilistic;
    if (s == "both") return FilterMode::both;
    throw std::invalid_argument("filter_mode must be hard, probabilistic or both, got '" + s + "'");
}

// Filtering schedule: hard top-k with k = ceil(beta * e), and rank-mapped
// Bernoulli filtering capped by P_max(e) = 1 - rho * e / E (0 past E).
struct FilterConfig {
    double beta = 8.0;
    double rho = 0.4;
    int threshold_epoch = 210;  // E
    FilterMode mode = FilterMode::both;

    void validate() const {
        if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
        if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in (0,1)");
        if (threshold_epoch < 1) throw std::invalid_argument("filter_epochs must be >= 1");
    }
};

// One ramp-down segment of the batch-max temperature:
//   T_max(e) = base_temp - temp_drop * min(1, (e - start_epoch) / duration_epochs)
struct TemperaturePhase {
    int start_epoch = 0;
    double base_temp = 20.0;
    double temp_drop = 10.0;
    double duration_epochs = 100.0;
};

struct TemperatureConfig {
    std::vector<TemperaturePhase> phases{{0, 20.0, 10.0, 100.0}, {100, 10.0, 9.0, 300.0}};
    double t_min = 0.1;

    void validate() const {
        if (phases.empty()) throw std::invalid_argument("temp_phases must not be empty");
        for (std::size_t i = 0; i < phases.size(); ++i) {
            if (!(phases[i].base_temp > 0.0)) {
                throw std::invalid_argument("temp_phases: base temperature must be > 0");
            }
            if (!(phases[i].duration_epochs > 0.0)) {
                throw std::invalid_argument("temp_phases: phase duration must be > 0");
            }
            if (i > 0 && phases[i].start_epoch <= phases[i - 1].start_epoch) {
                throw std::invalid_argument("temp_phases: start epochs must be strictly increasing");
            }
        }
        if (!(t_min > 0.0)) throw std::invalid_argument("t_min must be > 0");
    }
};

// Ramp-up weight of the consistency term in the combined objective.
struct ConsistencyWeights {
    double lambda_max = 10.0;
    int ramp_epochs = 25;

    void validate() const {
        if (lambda_max < 0.0) throw std::invalid_argument("lambda_max must be >= 0");
        if (ramp_epochs < 1) throw std::invalid_argument("ramp_epochs must be >= 1");
    }
};

// All certainty-driven-consistency hyperparameters in one place.
struct CclConfig {
    FilterConfig filter{};
    TemperatureConfig temperature{};
    ConsistencyWeights weights{};
    double ema_decay = 0.99;
    int mc_passes = 10;

    void validate() const {
        filter.validate();
        temperature.validate();
        weights.validate();
        if (ema_decay < 0.0 || ema_decay >= 1.0) {
            throw std::invalid_argument("ema_decay must be in [0,1)");
        }
        if (mc_passes < 2) throw std::invalid_argument("mc_passes must be >= 2");
    }
};

}  // namespace ccl
