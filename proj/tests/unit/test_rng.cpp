#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ccl/rng.hpp"

using namespace ccl;

TEST_CASE("streams with the same seed replay identically") {
    RngStream a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    RngStream c(123);
    c.next_u64();
    RngStream copy = c;  // copy mid-stream
    for (int i = 0; i < 50; ++i) {
        REQUIRE(c.gaussian() == copy.gaussian());
    }
}

TEST_CASE("mix_seed is order sensitive and spreads nearby inputs") {
    REQUIRE(mix_seed({1, 2}) != mix_seed({2, 1}));
    REQUIRE(mix_seed({1}) != mix_seed({2}));
    REQUIRE(mix_seed({7, 0}) != mix_seed({7, 1}));
}

TEST_CASE("uniform stays in [0,1) and has a sane mean") {
    RngStream rng(7);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    REQUIRE(std::abs(sum / 20000 - 0.5) < 0.02);
}

TEST_CASE("gaussian moments") {
    RngStream rng(11);
    double sum = 0.0, sq = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sq += g * g;
    }
    REQUIRE(std::abs(sum / n) < 0.03);
    REQUIRE(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("uniform_u64 respects inclusive bounds") {
    RngStream rng(5);
    std::vector<int> hits(6, 0);
    for (int i = 0; i < 6000; ++i) {
        const std::uint64_t x = rng.uniform_u64(2, 5);
        REQUIRE(x >= 2);
        REQUIRE(x <= 5);
        hits[static_cast<std::size_t>(x)]++;
    }
    for (int v = 2; v <= 5; ++v) REQUIRE(hits[static_cast<std::size_t>(v)] > 1000);
}

TEST_CASE("shuffle is a seeded permutation") {
    std::vector<int> v(20);
    std::iota(v.begin(), v.end(), 0);
    std::vector<int> w = v;
    RngStream a(99), b(99);
    a.shuffle(v);
    b.shuffle(w);
    REQUIRE(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 20; ++i) REQUIRE(sorted[static_cast<std::size_t>(i)] == i);
}
