#include "snakemin/spine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "snakemin/sde.hpp"

namespace snakemin {

double sample_wstar_conditioned(double a0, RngStream& rng) {
    if (!(a0 > 0.0)) throw std::invalid_argument("sample_wstar_conditioned: a0 must be positive");
    return a0 / std::sqrt(rng.uniform());
}

FinitePath sample_minimizing_path(double a, double dt, RngStream& rng) {
    if (!(a > 0.0)) throw std::invalid_argument("sample_minimizing_path: a must be positive");
    const BesselConfig cfg = BesselConfig::with_defaults(3.0, 1.0, dt);
    const SamplePath unit = simulate_bessel(cfg, rng);
    if (unit.stop != StopReason::absorbed) throw std::runtime_error("sample_minimizing_path: horizon reached before absorption");
    std::vector<double> t(unit.times.size());
    std::vector<double> x(unit.values.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = a * a * unit.times[i];
        x[i] = a * unit.values[i] - a;
    }
    x.front() = 0.0;
    x.back() = -a;
    return FinitePath(std::move(t), std::move(x));
}

namespace {

std::vector<SubtreeRecord> one_side(Side side, const FinitePath& path, double a, const SubtreeSamplerConfig& cfg,
                                    RngStream& rng, std::size_t* proposals) {
    const double zeta = path.lifetime();
    const std::uint64_t k = rng.poisson(zeta / cfg.trunc_eps);
    *proposals = k;
    std::vector<SubtreeRecord> out;
    SnakeConfig sc = cfg.snake;
    sc.eps = cfg.trunc_eps;
    sc.focus_level = -a + cfg.band;
    sc.hit_level = -std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < k; ++i) {
        const double t = zeta * rng.uniform();
        sc.start = path.value_at(t);
        RngStream sub = rng.split(i);
        const SnakeTrajectory tr = simulate_snake(sc, sub);
        if (tr.wstar() <= -a) continue;
        SubtreeRecord r;
        r.side = side;
        r.branch_level = t;
        r.attach_value = sc.start;
        r.min_value = tr.wstar();
        r.height = tr.height();
        r.duration = tr.sigma();
        out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const SubtreeRecord& x, const SubtreeRecord& y) { return x.branch_level < y.branch_level; });
    return out;
}

}  // namespace

SpineSample sample_spine_subtrees(const FinitePath& min_path, double a, const SubtreeSamplerConfig& cfg, RngStream& rng) {
    if (!(a > 0.0)) throw std::invalid_argument("sample_spine_subtrees: a must be positive");
    if (!(cfg.trunc_eps > 0.0)) throw std::invalid_argument("sample_spine_subtrees: trunc_eps must be positive");
    if (std::abs(min_path.endpoint() + a) > 1e-9 * std::max(1.0, a))
        throw std::invalid_argument("sample_spine_subtrees: min_path must end at -a");
    SpineSample out;
    out.a = a;
    out.min_path = min_path;
    out.truncation_eps = cfg.trunc_eps;
    // Separate child streams keep the two sides independent of each other's
    // proposal counts.
    RngStream hat_rng = rng.split(0x4841);
    RngStream check_rng = rng.split(0x4348);
    out.hat_records = one_side(Side::hat, min_path, a, cfg, hat_rng, &out.hat_proposals);
    out.check_records = one_side(Side::check, min_path, a, cfg, check_rng, &out.check_proposals);
    return out;
}

double deep_subtree_intensity(const FinitePath& min_path, double a, double c, double gap) {
    if (!(a > 0.0)) throw std::invalid_argument("deep_subtree_intensity: a must be positive");
    if (!(c > 0.0 && c < a)) throw std::invalid_argument("deep_subtree_intensity: c must lie in (0, a)");
    if (!(gap >= 0.0)) throw std::invalid_argument("deep_subtree_intensity: gap must be nonnegative");
    const double level = -a + c + gap;
    if (gap == 0.0 && min_path.minimum() <= level)
        throw std::invalid_argument("deep_subtree_intensity: the path reaches -a + c, the intensity diverges without a gap");
    const double k1 = a - c;
    const double k2 = a;
    double total = 0.0;
    const auto& t = min_path.times;
    const auto& w = min_path.values;
    for (std::size_t i = 1; i < t.size(); ++i) {
        double t0 = t[i - 1];
        double t1 = t[i];
        double w0 = w[i - 1];
        double w1 = w[i];
        if (w0 < level && w1 < level) continue;
        if (w0 < level || w1 < level) {
            // Keep the part above the level.
            const double tc = t0 + (level - w0) / (w1 - w0) * (t1 - t0);
            if (w0 < level) {
                t0 = tc;
                w0 = level;
            } else {
                t1 = tc;
                w1 = level;
            }
        }
        const double h = t1 - t0;
        if (!(h > 0.0)) continue;
        // Exact for linear w: int dt / (w + k)^2 = h / ((w0 + k)(w1 + k)).
        total += 3.0 * h * (1.0 / ((w0 + k1) * (w1 + k1)) - 1.0 / ((w0 + k2) * (w1 + k2)));
    }
    return total;
}

std::size_t count_deep(const std::vector<SubtreeRecord>& records, double a, double c, double gap) {
    const double band = -a + c;
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const SubtreeRecord& r) {
        return r.min_value <= band && r.attach_value >= band + gap;
    }));
}

double reconstruct_wstar(const SpineSample& sample) {
    double out = -sample.a;
    for (const auto* side : {&sample.hat_records, &sample.check_records})
        for (const auto& r : *side) out = std::min(out, r.min_value);
    return out;
}

void write_spine_json(const SpineSample& sample, std::ostream& out) {
    nlohmann::json j;
    j["a"] = sample.a;
    j["truncation_eps"] = sample.truncation_eps;
    j["min_path"] = {{"times", sample.min_path.times}, {"values", sample.min_path.values}};
    j["hat_proposals"] = sample.hat_proposals;
    j["check_proposals"] = sample.check_proposals;
    auto dump = [](const std::vector<SubtreeRecord>& rs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rs)
            arr.push_back({{"side", to_string(r.side)},
                           {"branch_level", r.branch_level},
                           {"attach_value", r.attach_value},
                           {"min_value", r.min_value},
                           {"height", r.height},
                           {"duration", r.duration}});
        return arr;
    };
    j["hat_records"] = dump(sample.hat_records);
    j["check_records"] = dump(sample.check_records);
    out << j.dump(2) << '\n';
}

}  // namespace snakemin
