#include <catch2/catch_amalgamated.hpp>

#include <limits>

#include "ccl/tensor.hpp"

using namespace ccl;

TEST_CASE("tensor layout is row-major") {
    Tensor t(2, 3);
    t(0, 0) = 1.0;
    t(0, 2) = 2.0;
    t(1, 1) = 3.0;
    REQUIRE(t.data.size() == 6);
    REQUIRE(t.data[0] == 1.0);
    REQUIRE(t.data[2] == 2.0);
    REQUIRE(t.data[4] == 3.0);
}

TEST_CASE("matmul small example") {
    Tensor a(2, 3);
    a.data = {1, 2, 3, 4, 5, 6};
    Tensor b(3, 2);
    b.data = {7, 8, 9, 10, 11, 12};
    const Tensor c = matmul(a, b);
    REQUIRE(c.rows == 2);
    REQUIRE(c.cols == 2);
    REQUIRE(c(0, 0) == Catch::Approx(58.0));
    REQUIRE(c(0, 1) == Catch::Approx(64.0));
    REQUIRE(c(1, 0) == Catch::Approx(139.0));
    REQUIRE(c(1, 1) == Catch::Approx(154.0));
}

TEST_CASE("matmul rejects incompatible shapes") {
    Tensor a(2, 3), b(4, 1);
    REQUIRE_THROWS_AS(matmul(a, b), std::invalid_argument);
}

TEST_CASE("transpose round trip") {
    Tensor a(2, 3);
    a.data = {1, 2, 3, 4, 5, 6};
    const Tensor t = transposed(a);
    REQUIRE(t.rows == 3);
    REQUIRE(t(0, 1) == 4.0);
    const Tensor back = transposed(t);
    REQUIRE(back.data == a.data);
}

TEST_CASE("finite checks flag NaN and infinity") {
    Tensor t(1, 2, 0.0);
    REQUIRE(all_finite(t));
    t(0, 1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_FALSE(all_finite(t));
    REQUIRE_THROWS_AS(require_finite(t, "test"), std::runtime_error);
    t(0, 1) = std::numeric_limits<double>::infinity();
    REQUIRE_FALSE(all_finite(t));
}
