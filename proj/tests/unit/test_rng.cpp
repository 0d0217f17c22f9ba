#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "snakemin/rng.hpp"

using namespace snakemin;

TEST_CASE("philox4x32-10 reproduces the published known-answer vectors") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
    RngStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    std::set<std::uint64_t> firsts;
    for (int i = 0; i < 5; ++i) {
        const auto x = a();
        CHECK(x == b());
        firsts.insert(x);
    }
    CHECK(c() != RngStream(7, 3)());
    CHECK(d() != RngStream(7, 3)());
    CHECK(a.split(1)() != a.split(2)());
    CHECK(a.split(1)() == b.split(1)());
    CHECK(stream_id(1, 0, 5) != stream_id(2, 0, 5));
    CHECK(stream_id(1, 1, 5) != stream_id(1, 0, 5));
}

TEST_CASE("uniform, normal and exponential moments") {
    RngStream rng(11, 0);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0, se = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        se += rng.exponential();
    }
    // Tolerances are 5 standard errors.
    CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(sn / n) < 5 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 5 * std::sqrt(2.0 / n));
    CHECK(std::abs(se / n - 1.0) < 5 / std::sqrt(n));
}

TEST_CASE("poisson draws have the right mean and zero for a nonpositive mean") {
    RngStream rng(12, 0);
    CHECK(rng.poisson(0.0) == 0);
    CHECK(rng.poisson(-1.0) == 0);
    double s = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) s += static_cast<double>(rng.poisson(2.5));
    CHECK(std::abs(s / n - 2.5) < 5 * std::sqrt(2.5 / n));
}
