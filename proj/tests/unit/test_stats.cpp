#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "snakemin/rng.hpp"
#include "snakemin/stats.hpp"

using namespace snakemin;

TEST_CASE("identical samples give a zero KS distance") {
    std::vector<double> x;
    RngStream rng(31, 0);
    for (int i = 0; i < 100; ++i) x.push_back(rng.normal());
    const TestResult r = ks_two_sample(x, x);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("KS tests are calibrated under the null") {
    // False-alarm rate at 5% over 400 replicate tests; binomial sd is 1.1%.
    int one = 0, two = 0;
    for (int rep = 0; rep < 400; ++rep) {
        RngStream rng(32, static_cast<std::uint64_t>(rep));
        std::vector<double> a, b;
        for (int i = 0; i < 300; ++i) {
            a.push_back(rng.uniform());
            b.push_back(rng.uniform());
        }
        one += ks_one_sample(a, [](double x) { return x; }).p_value < 0.05 ? 1 : 0;
        two += ks_two_sample(a, b).p_value < 0.05 ? 1 : 0;
    }
    CHECK(one >= 8);
    CHECK(one <= 36);
    CHECK(two >= 8);
    CHECK(two <= 36);
}

TEST_CASE("KS detects a shifted sample") {
    RngStream rng(33, 0);
    std::vector<double> a;
    for (int i = 0; i < 2000; ++i) a.push_back(rng.uniform() + 0.1);
    CHECK(ks_one_sample(a, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value < 1e-6);
    CHECK_THROWS_AS(ks_one_sample({0.1, std::nan("")}, [](double x) { return x; }), std::invalid_argument);
}

TEST_CASE("chi-square Poisson tests are calibrated and have power") {
    int alarms = 0;
    for (int rep = 0; rep < 300; ++rep) {
        RngStream rng(34, static_cast<std::uint64_t>(rep));
        std::vector<std::uint64_t> k;
        std::vector<double> lam;
        for (int i = 0; i < 1000; ++i) {
            const double l = 0.5 + 3.0 * rng.uniform();
            lam.push_back(l);
            k.push_back(rng.poisson(l));
        }
        alarms += chi_square_poisson_mixture(k, lam).p_value < 0.05 ? 1 : 0;
    }
    CHECK(alarms >= 5);
    CHECK(alarms <= 28);
    RngStream rng(35, 0);
    std::vector<std::uint64_t> k;
    for (int i = 0; i < 3000; ++i) k.push_back(rng.poisson(2.0));
    CHECK(chi_square_poisson(k, 2.0).p_value > 0.001);
    CHECK(chi_square_poisson(k, 2.4).p_value < 1e-6);
    CHECK_THROWS_AS(chi_square_poisson(k, 0.0), std::invalid_argument);
}

TEST_CASE("independence test") {
    CHECK(chi_square_independence({{50, 50}, {50, 50}}).statistic == 0.0);
    CHECK(chi_square_independence({{90, 10}, {10, 90}}).p_value < 1e-10);
    CHECK_THROWS_AS(chi_square_independence({{1, 2}, {3, 4}}), std::invalid_argument);
}

TEST_CASE("mean confidence interval and correlation") {
    const MeanCI m = mc_mean_ci({1.0, 2.0, 3.0, 4.0}, 0.95);
    CHECK(m.mean == 2.5);
    CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(m.half_width == doctest::Approx(1.959964 * m.std_error).epsilon(1e-6));
    CHECK(pearson_correlation({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(mc_mean_ci({1.0}, 0.95), std::invalid_argument);
}

TEST_CASE("Kolmogorov tail and critical distance") {
    CHECK(kolmogorov_tail(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(kolmogorov_tail(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(ks_critical_distance(10000, 0.05) == doctest::Approx(0.013581).epsilon(1e-3));
}

TEST_CASE("randomized Poisson PIT is uniform") {
    RngStream rng(36, 0);
    std::vector<double> u;
    for (int i = 0; i < 20000; ++i) u.push_back(poisson_pit(rng.poisson(1.3), 1.3, rng.uniform()));
    CHECK(ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value > 0.01);
}

TEST_CASE("verdict report is one JSON line") {
    VerdictReport r;
    r.check_id = "x";
    r.pass = true;
    const std::string s = r.to_json();
    CHECK(s.find('\n') == std::string::npos);
    CHECK(s.find("\"p_value\":null") != std::string::npos);
}
