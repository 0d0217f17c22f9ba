#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "snakemin/paths.hpp"

using namespace snakemin;

TEST_CASE("finite path interpolation, minimum and first passage") {
    const FinitePath p({0.0, 1.0, 2.0}, {0.0, -1.0, 1.0});
    CHECK(p.value_at(0.5) == doctest::Approx(-0.5));
    CHECK(p.value_at(1.5) == doctest::Approx(0.0));
    CHECK(p.minimum() == -1.0);
    CHECK(p.lifetime() == 2.0);
    CHECK(p.endpoint() == 1.0);
    CHECK(p.first_hitting_time_below(-0.5) == doctest::Approx(0.5));
    CHECK(p.first_hitting_time_below(-2.0) < 0.0);
    const FinitePath q = p.shifted(1.0);
    CHECK(q.minimum() == 0.0);
    CHECK(FinitePath::trivial(3.0).is_trivial());
}

TEST_CASE("finite path rejects bad grids") {
    CHECK_THROWS_AS(FinitePath({0.0, 1.0}, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(FinitePath({0.0, 1.0, 0.5}, {0.0, 1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(FinitePath({1.0, 2.0}, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("sample path trapezoid integral") {
    SamplePath s;
    s.times = {0.0, 1.0, 3.0};
    s.values = {1.0, 2.0, 2.0};
    CHECK(s.integrate([](double x) { return x; }) == doctest::Approx(1.5 + 4.0));
    CHECK(s.value_at(2.0) == doctest::Approx(2.0));
}
