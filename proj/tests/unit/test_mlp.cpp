#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ccl/losses.hpp"
#include "ccl/mlp.hpp"
#include "ccl/rng.hpp"

using namespace ccl;

namespace {

// test-side central-difference oracle over the model parameters, evaluated
// through the replayed forward (fixed noise, fixed dropout masks)
template <class LossFn>
std::vector<double> fd_param_grads(MlpModel& model, const ForwardCache& cache, LossFn loss_of_logits,
                                   double h = 1e-5) {
    std::vector<double*> params;
    for (MlpLayer& l : model.layers) {
        for (double& v : l.weight.data) params.push_back(&v);
        for (double& v : l.bias.data) params.push_back(&v);
    }
    std::vector<double> grads(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = *params[i];
        *params[i] = keep + h;
        const double up = loss_of_logits(forward_replay(model, cache));
        *params[i] = keep - h;
        const double down = loss_of_logits(forward_replay(model, cache));
        *params[i] = keep;
        grads[i] = (up - down) / (2.0 * h);
    }
    return grads;
}

std::vector<double> flatten(const ModelGrads& g) {
    std::vector<double> flat;
    for (const MlpLayer& l : g.layers) {
        flat.insert(flat.end(), l.weight.data.begin(), l.weight.data.end());
        flat.insert(flat.end(), l.bias.data.begin(), l.bias.data.end());
    }
    return flat;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

MlpModel identity_model() {
    MlpModel m;
    MlpLayer layer;
    layer.weight = Tensor(2, 2);
    layer.weight(0, 0) = 1.0;
    layer.weight(1, 1) = 1.0;
    layer.bias = Tensor(1, 2, 0.0);
    m.layers.push_back(layer);
    m.dropout_rates = {0.0};
    return m;
}

}  // namespace

TEST_CASE("identity single-layer model passes inputs through") {
    MlpModel m = identity_model();
    Tensor x(1, 2);
    x.data = {1.0, 2.0};
    Perturbation none = Perturbation::none();
    const ForwardResult out = forward(m, x, none);
    REQUIRE(out.logits(0, 0) == 1.0);
    REQUIRE(out.logits(0, 1) == 2.0);
}

TEST_CASE("degenerate dropout rate is rejected") {
    MlpModel m = identity_model();
    m.dropout_rates = {1.0};
    Tensor x(1, 2, 0.5);
    Perturbation pert(0.0, true, 1);
    REQUIRE_THROWS_WITH(forward(m, x, pert), Catch::Matchers::ContainsSubstring("degenerate dropout rate"));
}

TEST_CASE("dimension mismatch names the layer") {
    MlpModel m = identity_model();
    Tensor x(1, 3, 0.0);
    Perturbation none = Perturbation::none();
    REQUIRE_THROWS_WITH(forward(m, x, none), Catch::Matchers::ContainsSubstring("layer 0"));
}

TEST_CASE("same perturbation state gives identical logits") {
    RngStream init(3);
    MlpModel m = make_mlp(2, {5}, 3, {0.4}, init);
    Tensor x(4, 2);
    RngStream data_rng(17);
    for (double& v : x.data) v = data_rng.gaussian();

    Perturbation pert(0.1, true, 77);
    Perturbation replayed = pert;  // value copy preserves the stream state
    const Tensor a = forward(m, x, pert).logits;
    const Tensor b = forward(m, x, replayed).logits;
    REQUIRE(a.data == b.data);
}

TEST_CASE("deterministic forward draws nothing") {
    RngStream init(3);
    MlpModel m = make_mlp(2, {5}, 3, {0.4}, init);
    Tensor x(2, 2, 0.3);
    Perturbation off(0.0, false, 5);
    const std::uint64_t before = RngStream(5).next_u64();
    const Tensor a = forward(m, x, off).logits;
    const Tensor b = forward_deterministic(m, x);
    REQUIRE(a.data == b.data);
    REQUIRE(off.rng.next_u64() == before);  // stream untouched by the forward
}

TEST_CASE("replaying the cache reproduces the logits exactly") {
    RngStream init(9);
    MlpModel m = make_mlp(3, {6, 4}, 2, {0.3, 0.3}, init);
    Tensor x(5, 3);
    RngStream data_rng(1);
    for (double& v : x.data) v = data_rng.gaussian();
    Perturbation pert(0.2, true, 123);
    const ForwardResult out = forward(m, x, pert);
    const Tensor replay = forward_replay(m, out.cache);
    REQUIRE(replay.data == out.logits.data);
}

TEST_CASE("zero upstream gradient gives all-zero parameter gradients") {
    RngStream init(4);
    MlpModel m = make_mlp(2, {4}, 2, {0.0}, init);
    Tensor x(3, 2, 0.7);
    Perturbation none = Perturbation::none();
    const ForwardResult out = forward(m, x, none);
    const ModelGrads g = backward(m, out.cache, Tensor(3, 2, 0.0));
    for (double v : flatten(g)) REQUIRE(v == 0.0);
}

TEST_CASE("single linear layer: grad_W = x^T g") {
    MlpModel m = identity_model();
    Tensor x(2, 2);
    x.data = {1.0, 2.0, 3.0, 4.0};
    Perturbation none = Perturbation::none();
    const ForwardResult out = forward(m, x, none);
    Tensor g(2, 2);
    g.data = {0.5, -1.0, 2.0, 0.25};
    const ModelGrads grads = backward(m, out.cache, g);
    const Tensor expected = matmul(transposed(x), g);
    for (std::size_t i = 0; i < expected.data.size(); ++i) {
        REQUIRE(grads.layers[0].weight.data[i] == Catch::Approx(expected.data[i]).margin(1e-14));
    }
    // bias gradient is the column sum of g
    REQUIRE(grads.layers[0].bias(0, 0) == Catch::Approx(2.5));
    REQUIRE(grads.layers[0].bias(0, 1) == Catch::Approx(-0.75));
}

TEST_CASE("backward matches central finite differences on random small models") {
    RngStream rng(2024);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t in_dim = 2 + rng.uniform_index(3);
        const int hid = 3 + static_cast<int>(rng.uniform_index(3));
        const std::size_t classes = 2 + rng.uniform_index(2);
        const std::size_t rows = 1 + rng.uniform_index(3);

        RngStream init(rng.next_u64());
        MlpModel m = make_mlp(in_dim, {hid}, classes, {0.25}, init);
        Tensor x(rows, in_dim);
        for (double& v : x.data) v = rng.gaussian();
        Perturbation pert(0.1, true, rng.next_u64());
        const ForwardResult out = forward(m, x, pert);

        Tensor w(rows, classes);
        for (double& v : w.data) v = rng.gaussian();
        const auto loss = [&](const Tensor& logits) {
            double acc = 0.0;
            for (std::size_t i = 0; i < logits.data.size(); ++i) acc += w.data[i] * logits.data[i];
            return acc;
        };

        const std::vector<double> analytic = flatten(backward(m, out.cache, w));
        const std::vector<double> numeric = fd_param_grads(m, out.cache, loss);
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            worst = std::max(worst, rel_err(analytic[i], numeric[i]));
        }
    }
    REQUIRE(worst < 1e-4);
}

TEST_CASE("no gradient flows through dropped units") {
    RngStream init(10);
    MlpModel m = make_mlp(2, {8}, 2, {0.5}, init);
    Tensor x(1, 2, 1.0);
    Perturbation pert(0.0, true, 42);
    const ForwardResult out = forward(m, x, pert);
    Tensor g(1, 2, 1.0);
    const ModelGrads grads = backward(m, out.cache, g);
    const Tensor& scales = out.cache.dropout_scales[1];
    REQUIRE_FALSE(scales.empty());
    // columns of the first-layer weight gradient that feed dropped units are zero
    bool saw_dropped = false;
    for (std::size_t j = 0; j < scales.cols; ++j) {
        if (scales(0, j) == 0.0) {
            saw_dropped = true;
            for (std::size_t i = 0; i < grads.layers[0].weight.rows; ++i) {
                REQUIRE(grads.layers[0].weight(i, j) == 0.0);
            }
        }
    }
    REQUIRE(saw_dropped);
}

TEST_CASE("backward rejects a cache from a different architecture") {
    RngStream init(6);
    MlpModel m = make_mlp(2, {4}, 2, {0.0}, init);
    Tensor x(2, 2, 0.1);
    Perturbation none = Perturbation::none();
    const ForwardResult out = forward(m, x, none);
    RngStream init2(7);
    MlpModel other = make_mlp(2, {4, 4}, 2, {0.0, 0.0}, init2);
    REQUIRE_THROWS_AS(backward(other, out.cache, Tensor(2, 2, 0.0)), std::invalid_argument);
}
