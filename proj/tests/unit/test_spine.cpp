#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "snakemin/spine.hpp"
#include "snakemin/stats.hpp"

using namespace snakemin;

TEST_CASE("conditioned W_* has median a0 sqrt(2)") {
    std::vector<double> a;
    RngStream rng(41, 0);
    for (int i = 0; i < 20000; ++i) a.push_back(sample_wstar_conditioned(0.5, rng));
    std::nth_element(a.begin(), a.begin() + 10000, a.end());
    CHECK(a[10000] == doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(0.02));
    CHECK(*std::min_element(a.begin(), a.end()) >= 0.5);
    CHECK_THROWS_AS(sample_wstar_conditioned(0.0, rng), std::invalid_argument);
}

TEST_CASE("minimizing path runs from 0 to -a with mean duration a^2/5") {
    std::vector<double> d;
    for (int i = 0; i < 3000; ++i) {
        RngStream rng(42, static_cast<std::uint64_t>(i));
        const FinitePath p = sample_minimizing_path(2.0, 1e-4, rng);
        REQUIRE(p.start() == 0.0);
        REQUIRE(p.endpoint() == -2.0);
        REQUIRE(p.minimum() == -2.0);
        d.push_back(p.lifetime());
    }
    const MeanCI m = mc_mean_ci(d, 0.95);
    CHECK(std::abs(m.mean - 0.8) < 3.0 * m.std_error);
}

TEST_CASE("deep-subtree intensity on the straight-line fixture") {
    // w(t) = -t on [0, 1], a = 1, c = 0.5: the part above -a + c + g is
    // t <= 0.5 - g, where int 3/(0.5 - t)^2 - 3/(1 - t)^2 dt is closed form.
    const double g = 0.1;
    const FinitePath line({0.0, 1.0}, {0.0, -1.0});
    const double te = 0.5 - g;
    const double exact = 3.0 * (1.0 / (0.5 - te) - 1.0 / 0.5) - 3.0 * (1.0 / (1.0 - te) - 1.0);
    CHECK(deep_subtree_intensity(line, 1.0, 0.5, g) == doctest::Approx(exact).epsilon(1e-12));
    // Grid refinement: 10x more points on the same line.
    std::vector<double> t, v;
    for (int k = 0; k <= 10; ++k) {
        t.push_back(k / 10.0);
        v.push_back(-k / 10.0);
    }
    const double fine = deep_subtree_intensity(FinitePath(t, v), 1.0, 0.5, g);
    CHECK(std::abs(fine - exact) / exact < 1e-4);
    // Without a gap the integral diverges on a path that reaches -a + c.
    CHECK_THROWS_AS(deep_subtree_intensity(line, 1.0, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(deep_subtree_intensity(line, 1.0, 1.5, 0.1), std::invalid_argument);
}

TEST_CASE("deep-subtree intensity shrinks as the gap widens") {
    RngStream rng(43, 0);
    const FinitePath p = sample_minimizing_path(1.0, 1e-4, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (double g : {0.02, 0.05, 0.1, 0.2, 0.4}) {
        const double l = deep_subtree_intensity(p, 1.0, 0.25, g);
        CHECK(l > 0.0);
        CHECK(l < prev);
        prev = l;
    }
}

TEST_CASE("spine subtrees respect the thinning and the proposal counts") {
    SubtreeSamplerConfig cfg;
    cfg.snake.max_steps = 100;
    cfg.band = 0.25;
    RngStream rng(44, 0);
    const FinitePath p = sample_minimizing_path(1.0, 1e-4, rng);
    const SpineSample s = sample_spine_subtrees(p, 1.0, cfg, rng);
    CHECK(s.hat_records.size() <= s.hat_proposals);
    CHECK(s.check_records.size() <= s.check_proposals);
    CHECK(reconstruct_wstar(s) == -1.0);
    for (const auto* side : {&s.hat_records, &s.check_records}) {
        for (const auto& r : *side) {
            REQUIRE(r.min_value > -1.0);
            REQUIRE(r.attach_value == doctest::Approx(p.value_at(r.branch_level)));
            REQUIRE(r.height > cfg.trunc_eps);
        }
    }
    std::ostringstream os;
    write_spine_json(s, os);
    const auto j = nlohmann::json::parse(os.str());
    CHECK(j["a"] == 1.0);
    CHECK(j["hat_records"].size() == s.hat_records.size());
    CHECK_THROWS_AS(sample_spine_subtrees(p, 2.0, cfg, rng), std::invalid_argument);
}

TEST_CASE("accepted subtree minima follow the truncated law") {
    // From a fixed attach value x on a flat spine, N_x(min <= y) = 3/(2(x-y)^2)
    // restricted to the subtrees that stay above -a. The height cutoff must be
    // small against (x - y)^2 for the cut to leave this law alone.
    const double x = -0.5, a = 1.0;
    const FinitePath flat({0.0, 0.5, 0.5 + 1e-9}, {x, x, -a});
    SubtreeSamplerConfig cfg;
    cfg.trunc_eps = 0.001;
    cfg.snake.max_steps = 100;
    cfg.band = 0.3;
    std::vector<double> mins;
    for (int rep = 0; rep < 400 && mins.size() < 1500; ++rep) {
        RngStream rng(45, static_cast<std::uint64_t>(rep));
        const SpineSample s = sample_spine_subtrees(flat, a, cfg, rng);
        for (const auto& r : s.hat_records)
            if (r.branch_level < 0.5 && r.min_value <= -0.7) mins.push_back(r.min_value);
    }
    REQUIRE(mins.size() > 200);
    // Given min in (-a, -0.7]: P(min <= y) = (1/(x-y)^2 - 1/(x+a)^2) / (1/(x+0.7)^2 - 1/(x+a)^2).
    auto f = [&](double y) { return 1.0 / ((x - y) * (x - y)); };
    const TestResult ks = ks_one_sample(mins, [&](double y) {
        if (y <= -a) return 0.0;
        if (y >= -0.7) return 1.0;
        return (f(y) - f(-a)) / (f(-0.7) - f(-a));
    });
    CHECK(ks.p_value > 0.01);
}

TEST_CASE("count_deep applies both thresholds") {
    std::vector<SubtreeRecord> r(3);
    r[0].min_value = -0.8;
    r[0].attach_value = -0.5;
    r[1].min_value = -0.7;
    r[1].attach_value = -0.5;
    r[2].min_value = -0.9;
    r[2].attach_value = -0.7;
    CHECK(count_deep(r, 1.0, 0.25, 0.125) == 1);
}
