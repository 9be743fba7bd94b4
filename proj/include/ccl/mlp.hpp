#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccl/rng.hpp"
#include "ccl/tensor.hpp"

namespace ccl {

struct MlpLayer {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out
};

// Feed-forward stack: ReLU on hidden layers, identity on the output layer.
// dropout_rates[l] is the drop probability applied to the *input* of layer l
// (inverted dropout, so expectations match the deterministic forward).
struct MlpModel {
    std::vector<MlpLayer> layers;
    std::vector<double> dropout_rates;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.rows; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weight.cols; }

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("mlp: no layers");
        if (dropout_rates.size() != layers.size()) {
            throw std::invalid_argument("mlp: dropout_rates length " +
                                        std::to_string(dropout_rates.size()) +
                                        " != layer count " + std::to_string(layers.size()));
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const MlpLayer& lay = layers[l];
            if (lay.bias.rows != 1 || lay.bias.cols != lay.weight.cols) {
                throw std::invalid_argument("mlp: layer " + std::to_string(l) +
                                            " bias shape " + lay.bias.shape_str() +
                                            " does not match weight " + lay.weight.shape_str());
            }
            if (l + 1 < layers.size() && lay.weight.cols != layers[l + 1].weight.rows) {
                throw std::invalid_argument(
                    "mlp: layer " + std::to_string(l) + " output dim " +
                    std::to_string(lay.weight.cols) + " != layer " + std::to_string(l + 1) +
                    " input dim " + std::to_string(layers[l + 1].weight.rows));
            }
            if (dropout_rates[l] < 0.0 || dropout_rates[l] >= 1.0) {
                throw std::invalid_argument("mlp: degenerate dropout rate " +
                                            std::to_string(dropout_rates[l]) + " at layer " +
                                            std::to_string(l) + " (rate must be in [0,1))");
            }
        }
    }
};

// Input-side stochasticity: Gaussian noise on the inputs plus the model's own
// dropout. With dropout_enabled=false and sigma=0 the forward pass is
// deterministic and draws nothing from the stream.
struct Perturbation {
    double input_noise_sigma = 0.0;
    bool dropout_enabled = false;
    RngStream rng{0};

    Perturbation() = default;
    Perturbation(double sigma, bool dropout, std::uint64_t seed)
        : input_noise_sigma(sigma), dropout_enabled(dropout), rng(seed) {}

    static Perturbation none() { return Perturbation(); }
};

// Everything needed to replay the pass: the noisy input and the dropout scale
// factors actually applied (0 for dropped units, 1/(1-rate) for kept ones).
struct ForwardCache {
    Tensor noisy_input;
    std::vector<Tensor> layer_inputs;     // post-dropout input to each layer
    std::vector<Tensor> pre_activations;  // z_l = input_l * W_l + b_l
    std::vector<Tensor> dropout_scales;   // empty tensor when layer l had no dropout
};

struct ForwardResult {
    Tensor logits;
    ForwardCache cache;
};

struct ModelGrads {
    std::vector<MlpLayer> layers;  // same shapes as the model's parameters
};

namespace detail {

inline Tensor affine(const Tensor& x, const MlpLayer& layer) {
    Tensor z = matmul(x, layer.weight);
    for (std::size_t i = 0; i < z.rows; ++i) {
        double* zr = z.row_ptr(i);
        const double* b = layer.bias.row_ptr(0);
        for (std::size_t j = 0; j < z.cols; ++j) zr[j] += b[j];
    }
    return z;
}

inline Tensor relu(const Tensor& z) {
    Tensor a = z;
    for (double& v : a.data) {
        if (v < 0.0) v = 0.0;
    }
    return a;
}

}  // namespace detail

inline ForwardResult forward(const MlpModel& model, const Tensor& inputs, Perturbation& pert) {
    model.validate();
    if (inputs.cols != model.input_dim()) {
        throw std::invalid_argument("forward: layer 0 expects input dim " +
                                    std::to_string(model.input_dim()) + ", got " +
                                    std::to_string(inputs.cols));
    }
    if (inputs.rows == 0) throw std::invalid_argument("forward: empty input batch");
    require_finite(inputs, "forward: inputs");

    ForwardCache cache;
    cache.noisy_input = inputs;
    if (pert.input_noise_sigma > 0.0) {
        for (double& v : cache.noisy_input.data) {
            v += pert.input_noise_sigma * pert.rng.gaussian();
        }
    }

    const std::size_t n_layers = model.layers.size();
    cache.layer_inputs.resize(n_layers);
    cache.pre_activations.resize(n_layers);
    cache.dropout_scales.resize(n_layers);

    Tensor x = cache.noisy_input;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const double rate = model.dropout_rates[l];
        if (pert.dropout_enabled && rate > 0.0) {
            Tensor scales(x.rows, x.cols);
            const double keep_scale = 1.0 / (1.0 - rate);
            for (std::size_t i = 0; i < scales.data.size(); ++i) {
                scales.data[i] = pert.rng.bernoulli(rate) ? 0.0 : keep_scale;
                x.data[i] *= scales.data[i];
            }
            cache.dropout_scales[l] = std::move(scales);
        }
        cache.layer_inputs[l] = x;
        Tensor z = detail::affine(x, model.layers[l]);
        cache.pre_activations[l] = z;
        x = (l + 1 < n_layers) ? detail::relu(z) : std::move(z);
    }

    require_finite(x, "forward: logits");
    return ForwardResult{std::move(x), std::move(cache)};
}

// Deterministic forward, no cache needed by callers.
inline Tensor forward_deterministic(const MlpModel& model, const Tensor& inputs) {
    Perturbation none = Perturbation::none();
    return forward(model, inputs, none).logits;
}

// Recomputes the logits from the cached noisy input and the cached dropout
// scale factors; the pure function of the parameters used by the
// finite-difference oracle.
inline Tensor forward_replay(const MlpModel& model, const ForwardCache& cache) {
    model.validate();
    const std::size_t n_layers = model.layers.size();
    if (cache.layer_inputs.size() != n_layers || cache.dropout_scales.size() != n_layers) {
        throw std::invalid_argument("forward_replay: cache does not match model layer count");
    }
    Tensor x = cache.noisy_input;
    for (std::size_t l = 0; l < n_layers; ++l) {
        if (!cache.dropout_scales[l].empty()) {
            const Tensor& scales = cache.dropout_scales[l];
            require_same_shape(x, scales, "forward_replay: dropout scales layer " + std::to_string(l));
            for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] *= scales.data[i];
        }
        Tensor z = detail::affine(x, model.layers[l]);
        x = (l + 1 < n_layers) ? detail::relu(z) : std::move(z);
    }
    return x;
}

// Standard backprop over the cached pass. Dropout masks are respected: no
// gradient flows through dropped units.
inline ModelGrads backward(const MlpModel& model, const ForwardCache& cache,
                           const Tensor& grad_logits) {
    const std::size_t n_layers = model.layers.size();
    if (cache.layer_inputs.size() != n_layers || cache.pre_activations.size() != n_layers) {
        throw std::invalid_argument("backward: cache does not match model layer count");
    }
    if (grad_logits.rows != cache.layer_inputs[0].rows ||
        grad_logits.cols != model.output_dim()) {
        throw std::invalid_argument("backward: grad_logits shape " + grad_logits.shape_str() +
                                    " does not match logits of the producing forward");
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        if (cache.layer_inputs[l].cols != model.layers[l].weight.rows) {
            throw std::invalid_argument("backward: cache layer " + std::to_string(l) +
                                        " input dim does not match model");
        }
    }

    ModelGrads grads;
    grads.layers.resize(n_layers);

    Tensor g = grad_logits;  // gradient wrt pre-activation of the current layer
    for (std::size_t l = n_layers; l-- > 0;) {
        const Tensor& xin = cache.layer_inputs[l];
        grads.layers[l].weight = matmul(transposed(xin), g);
        Tensor gb(1, g.cols, 0.0);
        for (std::size_t i = 0; i < g.rows; ++i) {
            const double* gr = g.row_ptr(i);
            for (std::size_t j = 0; j < g.cols; ++j) gb.data[j] += gr[j];
        }
        grads.layers[l].bias = std::move(gb);

        if (l == 0) break;
        Tensor gx = matmul(g, transposed(model.layers[l].weight));
        if (!cache.dropout_scales[l].empty()) {
            const Tensor& scales = cache.dropout_scales[l];
            for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= scales.data[i];
        }
        // through the ReLU of layer l-1
        const Tensor& z_prev = cache.pre_activations[l - 1];
        for (std::size_t i = 0; i < gx.data.size(); ++i) {
            if (z_prev.data[i] <= 0.0) gx.data[i] = 0.0;
        }
        g = std::move(gx);
    }
    return grads;
}

// He-normal weights, zero biases. hidden_dropout is broadcast when it has one
// entry; no dropout on the raw input or into the output layer beyond what the
// caller configures.
inline MlpModel make_mlp(std::size_t input_dim, const std::vector<int>& hidden,
                         std::size_t n_classes, const std::vector<double>& hidden_dropout,
                         RngStream& rng) {
    if (input_dim == 0 || n_classes == 0) {
        throw std::invalid_argument("make_mlp: zero input dim or class count");
    }
    std::vector<double> rates;
    if (hidden_dropout.size() == 1) {
        rates.assign(hidden.size(), hidden_dropout[0]);
    } else if (hidden_dropout.size() == hidden.size()) {
        rates = hidden_dropout;
    } else {
        throw std::invalid_argument("make_mlp: dropout list must have 1 or " +
                                    std::to_string(hidden.size()) + " entries");
    }

    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    for (int h : hidden) {
        if (h < 1) throw std::invalid_argument("make_mlp: hidden width must be >= 1");
        dims.push_back(static_cast<std::size_t>(h));
    }
    dims.push_back(n_classes);

    MlpModel m;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        MlpLayer layer;
        layer.weight = Tensor(dims[l], dims[l + 1]);
        const double scale = std::sqrt(2.0 / static_cast<double>(dims[l]));
        for (double& w : layer.weight.data) w = scale * rng.gaussian();
        layer.bias = Tensor(1, dims[l + 1], 0.0);
        m.layers.push_back(std::move(layer));
    }
    // dropout acts on the input of each layer: none on the raw input, the
    // configured rate on each hidden activation
    m.dropout_rates.assign(m.layers.size(), 0.0);
    for (std::size_t i = 0; i < rates.size(); ++i) m.dropout_rates[i + 1] = rates[i];
    m.validate();
    return m;
}

}  // namespace ccl
