#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ccl/mlp.hpp"
#include "ccl/tensor.hpp"

namespace ccl {

struct SgdConfig {
    double lr = 0.05;
    double momentum = 0.9;
};

// Momentum SGD. Velocity is owned here (single owner per model):
//   v <- momentum * v + g,  w <- w - lr * v
class SgdOptimizer {
public:
    SgdOptimizer(const MlpModel& model, SgdConfig cfg) : cfg_(cfg) {
        if (cfg.lr < 0.0) throw std::invalid_argument("sgd: negative learning rate");
        if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
            throw std::invalid_argument("sgd: momentum must be in [0,1)");
        }
        velocity_.reserve(model.layers.size());
        for (const MlpLayer& l : model.layers) {
            velocity_.push_back(MlpLayer{Tensor(l.weight.rows, l.weight.cols, 0.0),
                                         Tensor(1, l.bias.cols, 0.0)});
        }
    }

    void step(MlpModel& model, const ModelGrads& grads) {
        if (grads.layers.size() != model.layers.size() ||
            velocity_.size() != model.layers.size()) {
            throw std::invalid_argument("sgd: gradient layer count mismatch");
        }
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            update(model.layers[l].weight, velocity_[l].weight, grads.layers[l].weight,
                   "layer " + std::to_string(l) + " weight");
            update(model.layers[l].bias, velocity_[l].bias, grads.layers[l].bias,
                   "layer " + std::to_string(l) + " bias");
        }
    }

    const std::vector<MlpLayer>& velocity() const { return velocity_; }
    const SgdConfig& config() const { return cfg_; }

private:
    void update(Tensor& w, Tensor& v, const Tensor& g, const std::string& what) {
        require_same_shape(w, g, "sgd: " + what);
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            v.data[i] = cfg_.momentum * v.data[i] + g.data[i];
            w.data[i] -= cfg_.lr * v.data[i];
        }
    }

    SgdConfig cfg_;
    std::vector<MlpLayer> velocity_;
};

}  // namespace ccl
