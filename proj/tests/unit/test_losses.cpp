#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ccl/losses.hpp"
#include "ccl/rng.hpp"

using namespace ccl;

TEST_CASE("uniform logits give uniform probabilities at any temperature") {
    Tensor z(1, 3, 0.0);
    for (double t : {0.2, 1.0, 7.0}) {
        const Tensor p = temperature_softmax(z, t);
        for (double v : p.data) REQUIRE(v == Catch::Approx(1.0 / 3.0).margin(1e-15));
    }
}

TEST_CASE("T=1 equals plain softmax bitwise") {
    Tensor z(2, 4);
    RngStream rng(8);
    for (double& v : z.data) v = 3.0 * rng.gaussian();
    const Tensor a = softmax(z);
    const Tensor b = temperature_softmax(z, 1.0);
    REQUIRE(a.data == b.data);
}

TEST_CASE("temperature softmax direct evaluation") {
    Tensor z(1, 2);
    z.data = {2.0, 0.0};
    const Tensor p = temperature_softmax(z, 2.0);
    const double e = std::exp(1.0);
    REQUIRE(p(0, 0) == Catch::Approx(e / (e + 1.0)).epsilon(1e-12));
    REQUIRE(p(0, 1) == Catch::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
}

TEST_CASE("non-positive temperature is rejected") {
    Tensor z(1, 2, 0.0);
    REQUIRE_THROWS_WITH(temperature_softmax(z, 0.0),
                        Catch::Matchers::ContainsSubstring("non-positive temperature"));
    REQUIRE_THROWS_AS(temperature_softmax(z, -2.0), std::invalid_argument);
}

TEST_CASE("rows sum to one for wide logits and temperatures") {
    RngStream rng(12);
    for (double t : {0.1, 1.0, 10.0, 100.0}) {
        for (int i = 0; i < 50; ++i) {
            Tensor z(1, 5);
            for (double& v : z.data) v = rng.uniform(-50.0, 50.0);
            const Tensor p = temperature_softmax(z, t);
            double sum = 0.0;
            for (double v : p.data) sum += v;
            REQUIRE(std::abs(sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("max-class probability is non-increasing in T and tends to uniform") {
    RngStream rng(13);
    for (int inst = 0; inst < 20; ++inst) {
        Tensor z(1, 4);
        for (double& v : z.data) v = 2.5 * rng.gaussian();
        double spread = 0.0;
        for (double a : z.data) {
            for (double b : z.data) spread = std::max(spread, a - b);
        }
        double prev = 1.0;
        for (double t : {0.25, 0.5, 1.0, 2.0, 4.0, 16.0, 64.0, 256.0}) {
            const Tensor p = temperature_softmax(z, t);
            double pmax = 0.0;
            for (double v : p.data) pmax = std::max(pmax, v);
            REQUIRE(pmax <= prev + 1e-12);
            prev = pmax;
            if (t >= 64.0) {
                for (double v : p.data) {
                    REQUIRE(std::abs(v - 0.25) <= spread / t);
                }
            }
        }
    }
}

TEST_CASE("cross entropy of a one-hot row is zero") {
    Tensor p(1, 3, 0.0);
    p(0, 1) = 1.0;
    const CrossEntropyResult r = cross_entropy(p, 0, 1);
    REQUIRE(r.loss == 0.0);
    REQUIRE(r.grad_logits[0] == 0.0);
    REQUIRE(r.grad_logits[1] == 0.0);
}

TEST_CASE("cross entropy of uniform probabilities is ln C") {
    const std::size_t classes = 5;
    Tensor p(1, classes, 1.0 / static_cast<double>(classes));
    const CrossEntropyResult r = cross_entropy(p, 0, 2);
    REQUIRE(r.loss == Catch::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy hand example from logits [1,0]") {
    Tensor z(1, 2);
    z.data = {1.0, 0.0};
    const Tensor p = softmax(z);
    const double p1 = 1.0 / (1.0 + std::exp(1.0));
    REQUIRE(p(0, 1) == Catch::Approx(p1).epsilon(1e-12));
    const CrossEntropyResult r = cross_entropy(p, 0, 1);
    REQUIRE(r.loss == Catch::Approx(std::log(1.0 + std::exp(1.0))).epsilon(1e-12));
    REQUIRE(r.grad_logits[0] == Catch::Approx(1.0 - p1).epsilon(1e-12));
    REQUIRE(r.grad_logits[1] == Catch::Approx(p1 - 1.0).epsilon(1e-12));
}

TEST_CASE("cross entropy rejects out-of-range labels") {
    Tensor p(1, 3, 1.0 / 3.0);
    REQUIRE_THROWS_AS(cross_entropy(p, 0, 3), std::invalid_argument);
    REQUIRE_THROWS_AS(cross_entropy(p, 0, -1), std::invalid_argument);
}

TEST_CASE("mse of equal rows is zero with zero gradient") {
    Tensor p(2, 3, 0.4);
    const MseResult r = mse_rows(p, p);
    REQUIRE(r.per_row[0] == 0.0);
    REQUIRE(r.per_row[1] == 0.0);
    for (double g : r.grad_p.data) REQUIRE(g == 0.0);
}

TEST_CASE("mse hand arithmetic") {
    Tensor p(1, 2), q(1, 2);
    p.data = {1.0, 0.0};
    q.data = {0.0, 1.0};
    const MseResult r = mse_rows(p, q);
    REQUIRE(r.per_row[0] == Catch::Approx(2.0));
    REQUIRE(r.grad_p(0, 0) == Catch::Approx(2.0));
    REQUIRE(r.grad_p(0, 1) == Catch::Approx(-2.0));
}

TEST_CASE("mse gradient matches central finite differences") {
    RngStream rng(21);
    const double h = 1e-5;
    double worst = 0.0;
    for (int inst = 0; inst < 30; ++inst) {
        Tensor p(2, 4), q(2, 4);
        for (double& v : p.data) v = rng.gaussian();
        for (double& v : q.data) v = rng.gaussian();
        const MseResult analytic = mse_rows(p, q);
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            Tensor up = p, down = p;
            up.data[i] += h;
            down.data[i] -= h;
            const MseResult a = mse_rows(up, q);
            const MseResult b = mse_rows(down, q);
            double fa = 0.0, fb = 0.0;
            for (double v : a.per_row) fa += v;
            for (double v : b.per_row) fb += v;
            const double numeric = (fa - fb) / (2.0 * h);
            const double denom = std::max({1e-7, std::abs(numeric), std::abs(analytic.grad_p.data[i])});
            worst = std::max(worst, std::abs(numeric - analytic.grad_p.data[i]) / denom);
        }
    }
    REQUIRE(worst < 1e-6);
}

TEST_CASE("mse rejects mismatched shapes") {
    Tensor p(1, 2), q(2, 2);
    REQUIRE_THROWS_AS(mse_rows(p, q), std::invalid_argument);
}
