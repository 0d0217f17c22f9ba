#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "snakemin/stats.hpp"
#include "snakemin/superbm.hpp"

using namespace snakemin;

TEST_CASE("minimum law for a unit atom at 1") {
    const FiniteMeasure1D mu({{1.0, 1.0}});
    CHECK(mu.m() == 1.0);
    CHECK(cdf_mX(mu, 0.0) == doctest::Approx(std::exp(-1.5)));
    CHECK(cdf_mX(mu, 0.0) == doctest::Approx(0.22313016).epsilon(1e-7));
    CHECK(atom_probability(mu) == 0.0);
    CHECK_THROWS_AS(cdf_mX(mu, 1.0), std::invalid_argument);
}

TEST_CASE("measure algebra") {
    const FiniteMeasure1D a({{1.0, 1.0}});
    const FiniteMeasure1D b({{2.0, 0.5}});
    const FiniteMeasure1D s = a.plus(b);
    CHECK(s.total_mass() == 1.5);
    CHECK(s.m() == 1.0);
    for (double x : {-3.0, 0.0, 0.9})
        CHECK(cdf_mX(s, x) == doctest::Approx(cdf_mX(a, x) * cdf_mX(b, x)));
    const FiniteMeasure1D t = a.shifted(0.5);
    CHECK(cdf_mX(t, 0.2) == doctest::Approx(cdf_mX(a, -0.3)));
    CHECK_THROWS_AS(FiniteMeasure1D(std::vector<Atom>{}), std::invalid_argument);
    CHECK_THROWS_AS(FiniteMeasure1D({{0.0, -1.0}}), std::invalid_argument);
}

TEST_CASE("support below the lowest atom gives an atom of m_X at m") {
    const FiniteMeasure1D mu({{1.0, 1.0}}, 0.0);
    CHECK(atom_probability(mu) == doctest::Approx(std::exp(-1.5)));
    const FiniteMeasure1D j = FiniteMeasure1D::from_json(R"({"atoms": [{"u": 1, "mass": 1}], "support_min": 0})");
    CHECK(j.m() == 0.0);
    CHECK_THROWS(FiniteMeasure1D::from_json(R"({"nope": 1})"));
    const FiniteMeasure1D q = FiniteMeasure1D::from_quantiles([](double p) { return p; }, 2.0, 4);
    CHECK(q.atoms().size() == 4);
    CHECK(q.atoms()[0].u == 0.125);
    CHECK(q.m() == 0.0);
}

TEST_CASE("inverse-transform sampler matches its cdf") {
    const FiniteMeasure1D mu({{0.0, 0.5}, {0.7, 1.0}, {1.5, 2.0}});
    std::vector<double> x;
    RngStream rng(51, 0);
    for (int i = 0; i < 20000; ++i) x.push_back(sample_mX(mu, rng));
    const TestResult ks = ks_one_sample(x, [&](double v) { return v < mu.m() ? 1.0 - cdf_mX(mu, v) : 1.0; });
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("joint density marginalizes to the law of m_X") {
    const FiniteMeasure1D mu({{1.0, 1.0}, {2.0, 1.0}});
    const double x = 0.3;
    const double lo = -200.0;
    const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double y) { return joint_density_wmin0(mu, std::numeric_limits<double>::infinity(), y); }, lo, x, 15, 1e-12);
    // P(m_X <= x) = 1 - exp(-1.5 I(x)); the part below lo is tiny.
    CHECK(mass == doctest::Approx(1.0 - cdf_mX(mu, x) - (1.0 - cdf_mX(mu, lo))).epsilon(1e-6));
}

TEST_CASE("endpoint and path samples") {
    const FiniteMeasure1D mu({{1.0, 1.0}, {2.0, 1.0}});
    RngStream rng(52, 0);
    for (int i = 0; i < 200; ++i) {
        const SuperMinSample s = sample_wmin(mu, 1e-3, rng);
        REQUIRE(s.w0.has_value());
        REQUIRE((*s.w0 == 1.0 || *s.w0 == 2.0));
        REQUIRE(s.path.start() == *s.w0);
        REQUIRE(s.path.endpoint() == s.m_X);
        REQUIRE(s.path.minimum() == s.m_X);
    }
    std::ostringstream os;
    write_super_csv({sample_wmin(mu, 1e-3, rng)}, os);
    CHECK(os.str().rfind("m_X,w0,duration\r\n", 0) == 0);
}

TEST_CASE("Poisson construction agrees with the inverse transform below the floor") {
    const FiniteMeasure1D mu({{1.0, 1.0}});
    const double floor = 0.0;
    std::vector<double> a, b;
    RngStream rng(53, 0);
    while (a.size() < 5000) {
        const double v = sample_mX(mu, rng);
        if (v < floor) a.push_back(v);
    }
    while (b.size() < 5000)
        if (const auto y = poisson_min_construction(mu, floor, rng)) b.push_back(*y);
    CHECK(ks_two_sample(a, b).p_value > 0.01);
    CHECK_THROWS_AS(poisson_min_construction(mu, 1.0, rng), std::invalid_argument);
}
