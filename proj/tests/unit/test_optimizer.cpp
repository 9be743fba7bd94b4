#include <catch2/catch_amalgamated.hpp>

#include "ccl/mlp.hpp"
#include "ccl/optimizer.hpp"
#include "ccl/rng.hpp"

using namespace ccl;

namespace {

MlpModel scalar_model(double w) {
    MlpModel m;
    MlpLayer layer;
    layer.weight = Tensor(1, 1, w);
    layer.bias = Tensor(1, 1, 0.0);
    m.layers.push_back(layer);
    m.dropout_rates = {0.0};
    return m;
}

ModelGrads scalar_grads(double g) {
    ModelGrads grads;
    grads.layers.push_back(MlpLayer{Tensor(1, 1, g), Tensor(1, 1, 0.0)});
    return grads;
}

}  // namespace

TEST_CASE("lr zero leaves the model unchanged") {
    MlpModel m = scalar_model(1.25);
    SgdOptimizer opt(m, SgdConfig{0.0, 0.5});
    opt.step(m, scalar_grads(3.0));
    opt.step(m, scalar_grads(-7.0));
    REQUIRE(m.layers[0].weight(0, 0) == 1.25);
}

TEST_CASE("plain sgd single step") {
    MlpModel m = scalar_model(1.0);
    SgdOptimizer opt(m, SgdConfig{0.1, 0.0});
    opt.step(m, scalar_grads(0.5));
    REQUIRE(m.layers[0].weight(0, 0) == Catch::Approx(0.95).margin(1e-15));
}

TEST_CASE("momentum steps follow the velocity recursion") {
    const double lr = 0.1, mu = 0.9;
    const double g1 = 0.5, g2 = -0.2;
    MlpModel m = scalar_model(1.0);
    SgdOptimizer opt(m, SgdConfig{lr, mu});
    opt.step(m, scalar_grads(g1));
    opt.step(m, scalar_grads(g2));

    // hand recursion: v1 = g1, w1 = w0 - lr v1; v2 = mu v1 + g2, w2 = w1 - lr v2
    const double v1 = g1;
    const double w1 = 1.0 - lr * v1;
    const double v2 = mu * v1 + g2;
    const double w2 = w1 - lr * v2;
    REQUIRE(m.layers[0].weight(0, 0) == Catch::Approx(w2).margin(1e-15));
    REQUIRE(opt.velocity()[0].weight(0, 0) == Catch::Approx(v2).margin(1e-15));
}

TEST_CASE("shape mismatch is rejected") {
    MlpModel m = scalar_model(1.0);
    SgdOptimizer opt(m, SgdConfig{0.1, 0.0});
    ModelGrads bad;
    bad.layers.push_back(MlpLayer{Tensor(2, 1, 0.0), Tensor(1, 1, 0.0)});
    REQUIRE_THROWS_AS(opt.step(m, bad), std::invalid_argument);
    ModelGrads none;
    REQUIRE_THROWS_AS(opt.step(m, none), std::invalid_argument);
}

TEST_CASE("momentum outside [0,1) is rejected") {
    MlpModel m = scalar_model(1.0);
    REQUIRE_THROWS_AS(SgdOptimizer(m, SgdConfig{0.1, 1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(SgdOptimizer(m, SgdConfig{0.1, -0.1}), std::invalid_argument);
}
