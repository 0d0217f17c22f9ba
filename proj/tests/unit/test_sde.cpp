#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "snakemin/checks.hpp"
#include "snakemin/sde.hpp"
#include "snakemin/stats.hpp"

using namespace snakemin;

namespace {

std::vector<double> absorption_times(double alpha, double r0, double dt, int n, std::uint32_t sub) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) {
        RngStream rng(1, stream_id(900, sub, static_cast<std::uint64_t>(i)));
        const SamplePath p = simulate_bessel(BesselConfig::with_defaults(alpha, r0, dt), rng);
        REQUIRE(p.stop == StopReason::absorbed);
        REQUIRE(p.terminal() == 0.0);
        out.push_back(p.duration());
    }
    return out;
}

}  // namespace

TEST_CASE("mean absorption time of R^(3) from 1 is 1/5") {
    const auto t = absorption_times(3.0, 1.0, 1e-4, 4000, 0);
    const MeanCI m = mc_mean_ci(t, 0.95);
    CHECK(std::abs(m.mean - 0.2) < 3.0 * m.std_error);
}

TEST_CASE("absorption time law matches r0^2 / (2 Gamma(alpha + 1/2))") {
    for (double alpha : {2.0, 3.0}) {
        const auto t = absorption_times(alpha, 0.7, 1e-4, 3000, static_cast<std::uint32_t>(alpha));
        const TestResult ks = ks_one_sample(t, [&](double x) { return bessel_absorption_cdf(alpha, 0.7, x); });
        CHECK(ks.p_value > 0.01);
    }
    // Mean of the exact law by quadrature of the tail.
    double mean = 0.0;
    const double h = 1e-4;
    for (double x = h / 2; x < 20.0; x += h) mean += (1.0 - bessel_absorption_cdf(3.0, 1.0, x)) * h;
    CHECK(mean == doctest::Approx(0.2).epsilon(1e-4));
}

TEST_CASE("absorption time scales by c^2 when r0 scales by c") {
    auto a = absorption_times(3.0, 0.5, 1e-4, 2000, 10);
    const auto b = absorption_times(3.0, 1.0, 1e-4, 2000, 11);
    for (double& x : a) x *= 4.0;
    CHECK(ks_two_sample(a, b).p_value > 0.01);
}

TEST_CASE("level passage of R^(2) ends exactly at the level") {
    RngStream rng(2, 0);
    const SamplePath p = simulate_bessel_to_level(BesselConfig::with_defaults(2.0, 1.0, 1e-4), 0.5, rng);
    CHECK(p.stop == StopReason::level_hit);
    CHECK(p.terminal() == 0.5);
}

TEST_CASE("Bessel configuration is validated") {
    RngStream rng(2, 1);
    BesselConfig c = BesselConfig::with_defaults(3.0, 1.0);
    c.alpha = 0.0;
    CHECK_THROWS_AS(simulate_bessel(c, rng), std::invalid_argument);
    c = BesselConfig::with_defaults(3.0, 1.0);
    c.r0 = -1.0;
    CHECK_THROWS_AS(simulate_bessel(c, rng), std::invalid_argument);
    CHECK(BesselConfig::with_defaults(3.0, 1.0).dimension() == -5.0);
    CHECK_THROWS_AS(simulate_bessel_to_level(BesselConfig::with_defaults(2.0, 1.0), 1.5, rng), std::invalid_argument);
}

TEST_CASE("Girsanov: E[exp(-3 int ds / B^2)] up to the passage at 1/2 is 1/4") {
    // alpha = 2: the weight (r/delta)^2 exp(-3 int) has mean 1.
    std::vector<double> v;
    for (int i = 0; i < 20000; ++i) {
        RngStream rng(3, static_cast<std::uint64_t>(i));
        const SamplePath b = simulate_brownian_to_level(1.0, 0.5, 1e-4, 1e4, rng);
        if (!b.stopped()) {
            v.push_back(0.0);
            continue;
        }
        v.push_back(std::exp(-3.0 * b.integrate([](double x) { return 1.0 / (x * x); })));
    }
    const MeanCI m = mc_mean_ci(v, 0.95);
    CHECK(std::abs(m.mean - 0.25) < 3.0 * m.std_error + 1e-3);
}

TEST_CASE("bridge minimum follows the reflection law") {
    // P(min <= m) = exp(-2 (x0 - m)(x1 - m) / h) for m below both ends.
    const double x0 = 0.3, x1 = -0.2, h = 0.5;
    std::vector<double> mins;
    RngStream rng(4, 0);
    for (int i = 0; i < 100000; ++i) {
        const BridgeMinimum bm = bridge_minimum(0.0, x0, h, x1, rng);
        REQUIRE(bm.value <= std::min(x0, x1));
        REQUIRE(bm.time >= 0.0);
        REQUIRE(bm.time <= h);
        mins.push_back(bm.value);
    }
    const TestResult ks = ks_one_sample(mins, [&](double m) { return m >= x1 ? 1.0 : std::exp(-2.0 * (x0 - m) * (x1 - m) / h); });
    CHECK(ks.statistic < 0.01);
}

TEST_CASE("bridge minimum agrees with a fine random-walk bridge") {
    // Oracle: 2000-step Gaussian bridge; the discrete minimum is biased up by
    // about 0.58 sqrt(h / steps), which is added back.
    const double x0 = 0.0, x1 = 0.1, h = 1.0;
    const int steps = 2000;
    const double shift = 0.5826 * std::sqrt(h / steps);
    std::vector<double> walk, exact;
    RngStream rng(5, 0);
    for (int i = 0; i < 3000; ++i) {
        double x = x0, m = x0;
        for (int k = 1; k <= steps; ++k) {
            const double t = h * (k - 1) / steps;
            const double tn = h * k / steps;
            x = k == steps ? x1 : bridge_point(t, x, h, x1, tn, rng);
            m = std::min(m, x);
        }
        walk.push_back(m - shift);
        exact.push_back(bridge_minimum(0.0, x0, h, x1, rng).value);
    }
    CHECK(ks_two_sample(walk, exact).p_value > 0.01);
}

TEST_CASE("bridge minimum above a floor stays above it") {
    RngStream rng(6, 0);
    for (int i = 0; i < 10000; ++i) {
        const BridgeMinimum bm = bridge_minimum_above(0.0, 0.2, 1.0, 0.05, 0.0, rng);
        REQUIRE(bm.value >= 0.0);
        REQUIRE(bm.value <= 0.05);
    }
}

TEST_CASE("Bessel(9) last passage at 1 has mean 1/5") {
    std::vector<double> l;
    for (int i = 0; i < 3000; ++i) {
        RngStream rng(7, static_cast<std::uint64_t>(i));
        const SamplePath p = sample_bessel9_to_last_passage(1.0, 1e-4, 10.0, rng);
        REQUIRE(p.terminal() == doctest::Approx(1.0));
        l.push_back(p.duration());
    }
    const MeanCI m = mc_mean_ci(l, 0.95);
    CHECK(std::abs(m.mean - 0.2) < 3.0 * m.std_error);
}

TEST_CASE("Ito excursion conditioned on height: heights are eps / U") {
    std::vector<double> u;
    for (int i = 0; i < 5000; ++i) {
        RngStream rng(8, static_cast<std::uint64_t>(i));
        const LifetimeExcursion e = sample_ito_excursion(0.01, 1e-6, rng, 200);
        REQUIRE(e.height > 0.01);
        REQUIRE(e.zeta.front() == 0.0);
        REQUIRE(e.zeta.back() == 0.0);
        u.push_back(0.01 / e.height);
    }
    CHECK(ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value > 0.01);
}
