#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "snakemin/snake.hpp"
#include "snakemin/stats.hpp"

using namespace snakemin;

namespace {

SnakeTrajectory one(std::uint64_t rep, double focus = -0.3, double eps = 0.05) {
    SnakeConfig c;
    c.eps = eps;
    c.max_steps = 300;
    c.focus_level = focus;
    RngStream rng(21, rep);
    return simulate_snake(c, rng);
}

}  // namespace

TEST_CASE("snake excursion: lifetime starts and ends at zero, the tip starts at x") {
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        const SnakeTrajectory tr = one(rep);
        REQUIRE(tr.size() >= 2);
        CHECK(tr.zeta(0) == 0.0);
        CHECK(tr.zeta(tr.last()) == 0.0);
        CHECK(tr.tip(0) == 0.0);
        CHECK(tr.height() > tr.eps());
        for (std::size_t i = 0; i < tr.size(); ++i) {
            REQUIRE(tr.zeta(i) >= 0.0);
            REQUIRE(tr.tip(i) >= tr.wstar());
            if (i > 0) REQUIRE(tr.s(i) > tr.s(i - 1));
        }
        CHECK(tr.min_path().endpoint() == tr.wstar());
        CHECK(tr.min_path().minimum() == tr.wstar());
    }
}

TEST_CASE("snake property: paths agree up to the minimum lifetime in between") {
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
        const SnakeTrajectory tr = one(rep);
        const std::size_t step = std::max<std::size_t>(1, tr.size() / 12);
        for (std::size_t i = 0; i + step < tr.size(); i += step) {
            const std::size_t j = i + step;
            double m = tr.zeta(i);
            for (std::size_t k = i + 1; k <= j; ++k) m = std::min(m, tr.zeta_min(k));
            const FinitePath a = tr.path_at(i);
            const FinitePath b = tr.path_at(j);
            CHECK(a.lifetime() == doctest::Approx(tr.zeta(i)));
            for (int q = 0; q <= 8; ++q) {
                const double t = m * q / 8.0;
                REQUIRE(a.value_at(t) == b.value_at(t));
            }
        }
    }
}

TEST_CASE("double time reversal is the identity") {
    const SnakeTrajectory tr = one(3);
    const SnakeTrajectory rr = time_reverse(time_reverse(tr));
    CHECK(tr.sgrid() == rr.sgrid());
    CHECK(tr.zetas() == rr.zetas());
    CHECK(tr.tips() == rr.tips());
    CHECK(tr.sm_index() == rr.sm_index());
    const SnakeTrajectory r = time_reverse(tr);
    CHECK(r.reversed());
    CHECK(r.s(0) == 0.0);
    CHECK(r.sigma() == doctest::Approx(tr.sigma()));
    CHECK(r.zeta(1) == tr.zeta(tr.last() - 1));
    CHECK(r.wstar() == tr.wstar());
    CHECK_THROWS(first_hit_path(r, 0.1));
}

TEST_CASE("subtree records hang off the minimizing path") {
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
        const SnakeTrajectory tr = one(rep);
        const auto recs = subtree_decomposition(tr);
        for (const auto& r : recs) {
            REQUIRE(r.min_value >= tr.wstar());
            REQUIRE(r.branch_level >= 0.0);
            REQUIRE(r.branch_level <= tr.min_path().lifetime() + 1e-12);
            REQUIRE(r.attach_value == doctest::Approx(tr.min_path().value_at(r.branch_level)).epsilon(1e-9));
            REQUIRE(r.min_value <= r.attach_value + 1e-12);
        }
    }
}

TEST_CASE("first hit path ends exactly at -b") {
    SnakeConfig c;
    c.eps = 0.05;
    c.max_steps = 300;
    c.focus_level = -0.2;
    c.hit_level = -0.2;
    int found = 0;
    for (std::uint64_t rep = 0; rep < 200 && found < 5; ++rep) {
        RngStream rng(22, rep);
        const SnakeTrajectory tr = simulate_snake(c, rng);
        const auto p = first_hit_path(tr, 0.2);
        if (tr.wstar() > -0.2) {
            CHECK_FALSE(p.has_value());
            continue;
        }
        REQUIRE(p.has_value());
        CHECK(p->endpoint() == -0.2);
        CHECK(p->minimum() >= -0.2 - 1e-12);
        ++found;
    }
    CHECK(found == 5);
}

TEST_CASE("P(W_* <= -b) is close to 3 eps / b^2") {
    SnakeConfig c;
    c.eps = 0.01;
    c.max_steps = 500;
    c.focus_level = -0.5;
    const int n = 4000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        RngStream rng(23, static_cast<std::uint64_t>(i));
        hits += simulate_snake(c, rng).wstar() <= -0.5 ? 1 : 0;
    }
    const double p = static_cast<double>(hits) / n;
    CHECK(std::abs(p - 0.12) < 4.0 * std::sqrt(0.12 * 0.88 / n));
}

TEST_CASE("s_m and sigma - s_m have the same law") {
    std::vector<double> a, b;
    for (std::uint64_t rep = 0; rep < 1500; ++rep) {
        const SnakeTrajectory tr = one(1000 + rep, -0.2, 0.02);
        a.push_back(tr.sm_time());
        b.push_back(tr.sigma() - tr.sm_time());
    }
    CHECK(ks_two_sample(a, b).p_value > 0.01);
}

TEST_CASE("config validation and csv output") {
    SnakeConfig c;
    c.eps = 0.0;
    RngStream rng(24, 0);
    CHECK_THROWS_AS(simulate_snake(c, rng), std::invalid_argument);
    c = SnakeConfig{};
    c.ds = -1.0;
    CHECK_THROWS_AS(simulate_snake(c, rng), std::invalid_argument);
    std::ostringstream os;
    write_trajectory_csv(one(1), os);
    CHECK(os.str().rfind("s,zeta,tip\r\n", 0) == 0);
}
