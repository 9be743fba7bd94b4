#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ccl/rng.hpp"
#include "ccl/uncertainty.hpp"

using namespace ccl;

namespace {

PredictionStack random_stack(std::size_t k, std::size_t rows, std::size_t classes, RngStream& rng) {
    PredictionStack stack;
    for (std::size_t s = 0; s < k; ++s) {
        Tensor t(rows, classes);
        for (std::size_t i = 0; i < rows; ++i) {
            double sum = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                t(i, c) = -std::log(1.0 - rng.uniform());
                sum += t(i, c);
            }
            for (std::size_t c = 0; c < classes; ++c) t(i, c) /= sum;
        }
        stack.push_back(std::move(t));
    }
    return stack;
}

// naive two-pass oracle: mean, then squared deviations, per class, summed
std::vector<double> naive_pv(const PredictionStack& stack) {
    const std::size_t k = stack.size();
    const std::size_t rows = stack[0].rows;
    const std::size_t classes = stack[0].cols;
    std::vector<double> pv(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t c = 0; c < classes; ++c) {
            double mean = 0.0;
            for (std::size_t s = 0; s < k; ++s) mean += stack[s](i, c);
            mean /= static_cast<double>(k);
            double var = 0.0;
            for (std::size_t s = 0; s < k; ++s) {
                const double d = stack[s](i, c) - mean;
                var += d * d;
            }
            pv[i] += var / static_cast<double>(k);
        }
    }
    return pv;
}

MlpModel tiny_model(std::uint64_t seed, double dropout) {
    RngStream init(seed);
    return make_mlp(2, {6}, 3, {dropout}, init);
}

}  // namespace

TEST_CASE("identical slices give zero variance") {
    Tensor slice(3, 2);
    slice.data = {0.2, 0.8, 0.5, 0.5, 0.9, 0.1};
    const PredictionStack stack{slice, slice, slice};
    for (double pv : predictive_variance(stack)) REQUIRE(pv == 0.0);
}

TEST_CASE("two-pass hand example") {
    Tensor a(1, 2), b(1, 2);
    a.data = {0.8, 0.2};
    b.data = {0.6, 0.4};
    const std::vector<double> pv = predictive_variance({a, b});
    REQUIRE(pv[0] == Catch::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("predictive variance matches the naive oracle on 1000 random stacks") {
    RngStream rng(31);
    double worst = 0.0;
    for (int inst = 0; inst < 1000; ++inst) {
        const std::size_t k = 2 + rng.uniform_index(9);
        const std::size_t rows = 1 + rng.uniform_index(5);
        const std::size_t classes = 2 + rng.uniform_index(4);
        const PredictionStack stack = random_stack(k, rows, classes, rng);
        const std::vector<double> pv = predictive_variance(stack);
        const std::vector<double> oracle = naive_pv(stack);
        for (std::size_t i = 0; i < pv.size(); ++i) {
            worst = std::max(worst, std::abs(pv[i] - oracle[i]));
        }
    }
    REQUIRE(worst < 1e-12);
}

TEST_CASE("predictive variance is invariant under pass permutation") {
    RngStream rng(32);
    PredictionStack stack = random_stack(6, 4, 3, rng);
    const std::vector<double> before = predictive_variance(stack);
    std::reverse(stack.begin(), stack.end());
    std::swap(stack[0], stack[3]);
    const std::vector<double> after = predictive_variance(stack);
    for (std::size_t i = 0; i < before.size(); ++i) {
        REQUIRE(before[i] == Catch::Approx(after[i]).margin(1e-15));
    }
}

TEST_CASE("pv is zero only when every pass row is identical") {
    RngStream rng(33);
    PredictionStack stack = random_stack(4, 3, 3, rng);
    // force sample 1 identical across passes
    for (std::size_t s = 1; s < stack.size(); ++s) {
        for (std::size_t c = 0; c < stack[s].cols; ++c) stack[s](1, c) = stack[0](1, c);
    }
    const std::vector<double> pv = predictive_variance(stack);
    REQUIRE(pv[1] == 0.0);
    REQUIRE(pv[0] > 0.0);
    REQUIRE(pv[2] > 0.0);
}

TEST_CASE("rank examples") {
    REQUIRE(rank_by_uncertainty({0.3, 0.1, 0.2}) == std::vector<int>{3, 1, 2});
    REQUIRE(rank_by_uncertainty({0.5, 0.5, 0.5}) == std::vector<int>{1, 2, 3});
    REQUIRE(rank_by_uncertainty({4.2}) == std::vector<int>{1});
}

TEST_CASE("ranks are consistent with pv ordering") {
    RngStream rng(34);
    for (int inst = 0; inst < 50; ++inst) {
        std::vector<double> pv(10);
        for (double& v : pv) v = rng.uniform();
        const std::vector<int> ranks = rank_by_uncertainty(pv);
        std::vector<int> sorted = ranks;
        std::sort(sorted.begin(), sorted.end());
        for (int r = 1; r <= 10; ++r) REQUIRE(sorted[static_cast<std::size_t>(r - 1)] == r);
        for (std::size_t i = 0; i < pv.size(); ++i) {
            for (std::size_t j = 0; j < pv.size(); ++j) {
                if (ranks[i] < ranks[j]) REQUIRE(pv[i] <= pv[j]);
            }
        }
    }
}

TEST_CASE("mc_predict with no stochasticity repeats the same slice") {
    const MlpModel m = tiny_model(41, 0.0);
    Tensor x(3, 2);
    x.data = {0.1, -0.4, 1.0, 0.2, -0.7, 0.3};
    const PredictionStack stack = mc_predict(m, x, 5, 0.0, 99);
    for (std::size_t s = 1; s < stack.size(); ++s) {
        REQUIRE(stack[s].data == stack[0].data);
    }
}

TEST_CASE("mc_predict requires at least two passes") {
    const MlpModel m = tiny_model(41, 0.2);
    Tensor x(1, 2, 0.0);
    REQUIRE_THROWS_WITH(mc_predict(m, x, 1, 0.1, 7),
                        Catch::Matchers::ContainsSubstring("variance undefined"));
}

TEST_CASE("mc_predict is deterministic and rows are normalized") {
    const MlpModel m = tiny_model(43, 0.3);
    Tensor x(4, 2);
    RngStream data_rng(3);
    for (double& v : x.data) v = data_rng.gaussian();
    const PredictionStack a = mc_predict(m, x, 10, 0.1, 555);
    const PredictionStack b = mc_predict(m, x, 10, 0.1, 555);
    for (std::size_t s = 0; s < a.size(); ++s) REQUIRE(a[s].data == b[s].data);
    for (const Tensor& slice : a) {
        for (std::size_t i = 0; i < slice.rows; ++i) {
            double sum = 0.0;
            for (std::size_t c = 0; c < slice.cols; ++c) sum += slice(i, c);
            REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("each pass is reproducible in isolation") {
    // pass k of a K-pass run equals pass k of a (k+1)-pass run: sub-streams
    // are derived from (seed, pass), not from execution order
    const MlpModel m = tiny_model(44, 0.3);
    Tensor x(3, 2);
    RngStream data_rng(5);
    for (double& v : x.data) v = data_rng.gaussian();
    const PredictionStack full = mc_predict(m, x, 8, 0.1, 777);
    for (int k = 2; k <= 8; ++k) {
        const PredictionStack prefix = mc_predict(m, x, k, 0.1, 777);
        for (int s = 0; s < k; ++s) {
            REQUIRE(prefix[static_cast<std::size_t>(s)].data ==
                    full[static_cast<std::size_t>(s)].data);
        }
    }
}

TEST_CASE("estimate_uncertainty wires pv and ranks together") {
    const MlpModel m = tiny_model(45, 0.4);
    Tensor x(5, 2);
    RngStream data_rng(9);
    for (double& v : x.data) v = data_rng.gaussian();
    const UncertaintyReport r = estimate_uncertainty(m, x, 10, 0.1, 31337);
    REQUIRE(r.stack.size() == 10);
    REQUIRE(r.pv.size() == 5);
    REQUIRE(r.ranks == rank_by_uncertainty(r.pv));
    for (double pv : r.pv) REQUIRE(pv >= 0.0);
}
