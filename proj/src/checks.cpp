#include "snakemin/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include "json.hpp"

#include "snakemin/parallel.hpp"
#include "snakemin/sde.hpp"
#include "snakemin/snake.hpp"
#include "snakemin/spine.hpp"
#include "snakemin/superbm.hpp"

namespace snakemin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void guard(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

// ---------------------------------------------------------------------------
// Raw sample output

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row) { rows.push_back(std::move(row)); }
};

std::filesystem::path prepare_dir(const RunConfig& cfg) {
    const std::filesystem::path dir(cfg.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("output directory is not writable: " + cfg.output_dir);
    return dir;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

std::string write_table(const RunConfig& cfg, const Table& t) {
    const auto dir = prepare_dir(cfg);
    if (cfg.format == "json") {
        nlohmann::json j = nlohmann::json::object();
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            std::vector<double> col;
            col.reserve(t.rows.size());
            for (const auto& r : t.rows) col.push_back(r[c]);
            j[t.columns[c]] = col;
        }
        const auto path = dir / (t.name + ".json");
        auto out = open_out(path);
        out << j.dump() << '\n';
        return path.string();
    }
    const auto path = dir / (t.name + ".csv");
    auto out = open_out(path);
    out.precision(17);
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << "\r\n";
    for (const auto& r : t.rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) out << ',';
            if (!std::isnan(r[c])) out << r[c];
        }
        out << "\r\n";
    }
    return path.string();
}

void write_config(const RunConfig& cfg) {
    auto out = open_out(prepare_dir(cfg) / "run_config.json");
    out << cfg.to_json() << '\n';
}

// ---------------------------------------------------------------------------
// Shared helpers

using Clock = std::chrono::steady_clock;

struct CheckContext {
    const RunConfig& cfg;
    std::uint32_t tag;
    std::vector<Table> tables;

    RngStream stream(std::uint32_t sub, std::uint64_t rep) const { return RngStream(cfg.master_seed, stream_id(tag, sub, rep)); }
    std::uint64_t n_or(std::uint64_t fallback) const { return cfg.n.value_or(fallback); }
    double dt_or(double fallback) const { return cfg.dt.value_or(fallback); }
};

std::string fmt(double x, int digits = 6) {
    std::ostringstream s;
    s.precision(digits);
    s << x;
    return s.str();
}

double bessel_duration(double alpha, double r0, double dt, RngStream& rng) {
    const SamplePath p = simulate_bessel(BesselConfig::with_defaults(alpha, r0, dt), rng);
    if (p.stop != StopReason::absorbed) throw std::runtime_error("Bessel path reached its horizon before absorption");
    return p.duration();
}

// Runs fn(i) for i = 0, 1, ... in chunks until `want` replicates returned a
// value; the first `want` in replicate order are kept, so the result does not
// depend on the thread count.
template <class T, class Fn>
std::vector<T> collect(std::size_t want, std::size_t max_tries, unsigned threads, Fn&& fn, std::size_t* tried) {
    std::vector<T> out;
    out.reserve(want);
    std::size_t start = 0;
    const std::size_t chunk = std::max<std::size_t>(1024, want / 4);
    while (out.size() < want) {
        if (start >= max_tries) throw std::runtime_error("acceptance rate too low: replicate budget exhausted");
        const std::size_t len = std::min(chunk, max_tries - start);
        auto batch = parallel_map<std::optional<T>>(len, [&](std::size_t k) { return fn(start + k); }, threads);
        for (std::size_t k = 0; k < len && out.size() < want; ++k) {
            if (batch[k]) {
                out.push_back(std::move(*batch[k]));
                *tried = start + k + 1;
            }
        }
        start += len;
    }
    return out;
}

std::vector<double> log_grid(double lo, double hi) {
    std::vector<double> g;
    for (int k = 0; k <= 2000; ++k) g.push_back(lo * std::pow(hi / lo, k / 2000.0));
    return g;
}

// sup_t |P(T^(a1) <= t) - P(T^(a2) <= t)| from r0; the alternative used by the
// power guards of the duration checks.
double absorption_law_distance(double a1, double a2, double r0) {
    double d = 0.0;
    for (double t : log_grid(1e-4 * r0 * r0, 1e2 * r0 * r0))
        d = std::max(d, std::abs(bessel_absorption_cdf(a1, r0, t) - bessel_absorption_cdf(a2, r0, t)));
    return d;
}

void ks_power_guard(double n_a, double n_b, double alpha, double alt_distance, const std::string& who) {
    const double n_eff = n_a * n_b / (n_a + n_b);
    const double crit = ks_critical_distance(n_eff, alpha);
    guard(crit <= 0.5 * alt_distance, who + ": sample too small to detect the alternative (critical KS distance " +
                                          fmt(crit) + " > half of " + fmt(alt_distance) + ")");
}

VerdictReport make_report(const CheckContext& ctx, const std::string& id) {
    VerdictReport r;
    r.check_id = id;
    r.master_seed = ctx.cfg.master_seed;
    return r;
}

// ---------------------------------------------------------------------------
// 1. law-wstar

VerdictReport check_law_wstar(CheckContext& ctx) {
    const double eps = ctx.cfg.eps.value_or(0.01);
    const double b = 0.5;
    const double tol = 0.01;
    const std::uint64_t n = ctx.n_or(200000);
    const double target = 3.0 * eps / (b * b);
    guard(target < 1.0, "law-wstar: eps too large for the ratio 3 eps / b^2");
    guard(3.0 * std::sqrt(target * (1.0 - target) / static_cast<double>(n)) <= tol,
          "law-wstar: n too small, 3 standard errors exceed the tolerance");
    SnakeConfig sc;
    sc.eps = eps;
    sc.ds = ctx.cfg.ds.value_or(sc.ds);
    sc.focus_level = -b;
    struct Row {
        double wstar, height, sigma;
    };
    const auto rows = parallel_map<Row>(n, [&](std::size_t i) {
        RngStream rng = ctx.stream(0, i);
        const SnakeTrajectory tr = simulate_snake(sc, rng);
        return Row{tr.wstar(), tr.height(), tr.sigma()};
    }, ctx.cfg.threads);
    std::size_t hits = 0;
    Table t{"law-wstar", {"replicate", "wstar", "height", "sigma"}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        hits += rows[i].wstar <= -b ? 1 : 0;
        t.add({static_cast<double>(i), rows[i].wstar, rows[i].height, rows[i].sigma});
    }
    ctx.tables.push_back(std::move(t));
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    VerdictReport r = make_report(ctx, "law-wstar");
    r.statistic = std::abs(p - target);
    r.threshold = tol;
    r.n = n;
    r.pass = r.statistic <= tol;
    r.notes = "P(W_* <= -0.5) = " + fmt(p) + " (se " + fmt(std::sqrt(p * (1 - p) / n), 3) + ") vs 3 eps/b^2 = " +
              fmt(target) + "; overlap bias bound exp(-b^2/(2 eps)) = " + fmt(std::exp(-b * b / (2 * eps)), 3);
    return r;
}

// ---------------------------------------------------------------------------
// 2. girsanov-identity

VerdictReport check_girsanov(CheckContext& ctx) {
    const std::uint64_t n = ctx.n_or(200000);
    guard(n >= 1000, "girsanov-identity: n must be at least 1000");
    const double dt = ctx.dt_or(1e-4);
    const double r0 = 1.0;
    const double delta = 0.5;
    const double horizon = 20.0;
    double worst = 0.0;
    std::string notes;
    Table t{"girsanov-identity", {"alpha", "replicate", "weight", "weighted_hit_by_1", "direct_hit_by_1"}, {}};
    std::uint32_t sub = 0;
    for (double alpha : {2.0, 3.0}) {
        struct Row {
            double w, wi, direct;
        };
        const auto rows = parallel_map<Row>(n, [&](std::size_t i) {
            RngStream rb = ctx.stream(sub, i);
            const SamplePath bm = simulate_brownian_to_level(r0, delta, dt, horizon, rb);
            const double w = girsanov_martingale(bm, alpha, r0);
            const double wi = bm.stopped() && bm.duration() <= 1.0 ? w : 0.0;
            RngStream rd = ctx.stream(sub + 1, i);
            BesselConfig bc = BesselConfig::with_defaults(alpha, r0, dt);
            bc.max_time = 1.0;
            const SamplePath direct = simulate_bessel_to_level(bc, delta, rd);
            return Row{w, wi, direct.stop == StopReason::level_hit ? 1.0 : 0.0};
        }, ctx.cfg.threads);
        sub += 2;
        std::vector<double> w, wi, d;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            w.push_back(rows[i].w);
            wi.push_back(rows[i].wi);
            d.push_back(rows[i].direct);
            t.add({alpha, static_cast<double>(i), rows[i].w, rows[i].wi, rows[i].direct});
        }
        const MeanCI mw = mc_mean_ci(w, 0.95);
        const MeanCI mwi = mc_mean_ci(wi, 0.95);
        const MeanCI md = mc_mean_ci(d, 0.95);
        const double z1 = std::abs(mw.mean - 1.0) / mw.std_error;
        const double z2 = std::abs(mwi.mean - md.mean) / std::hypot(mwi.std_error, md.std_error);
        worst = std::max({worst, z1, z2});
        notes += "alpha=" + fmt(alpha, 2) + ": mean weight " + fmt(mw.mean) + " (se " + fmt(mw.std_error, 3) +
                 "), P(T<=1) direct " + fmt(md.mean) + " vs weighted " + fmt(mwi.mean) + "; ";
    }
    ctx.tables.push_back(std::move(t));
    VerdictReport r = make_report(ctx, "girsanov-identity");
    r.statistic = worst;
    r.threshold = 3.0;
    r.n = n;
    r.pass = worst <= 3.0;
    r.notes = notes + "statistic is the largest deviation in standard errors";
    return r;
}

// ---------------------------------------------------------------------------
// 3. laplace-bessel2

VerdictReport check_laplace(CheckContext& ctx) {
    const std::uint64_t n = ctx.n_or(200000);
    const double tol = 0.005;
    // Samples lie in [0, 1], so their standard deviation is at most 1/2.
    guard(3.0 * 0.5 / std::sqrt(static_cast<double>(n)) <= tol, "laplace-bessel2: n too small for the tolerance");
    const double dt = ctx.dt_or(1e-4);
    const auto vals = parallel_map<double>(n, [&](std::size_t i) {
        RngStream rng = ctx.stream(0, i);
        const SamplePath p = simulate_bessel(BesselConfig::with_defaults(2.0, 1.0, dt), rng);
        if (p.stop != StopReason::absorbed) throw std::runtime_error("laplace-bessel2: horizon reached");
        return std::exp(-3.0 * p.integrate([](double x) { return 1.0 / ((1.0 + x) * (1.0 + x)); }));
    }, ctx.cfg.threads);
    Table t{"laplace-bessel2", {"replicate", "functional"}, {}};
    for (std::size_t i = 0; i < vals.size(); ++i) t.add({static_cast<double>(i), vals[i]});
    ctx.tables.push_back(std::move(t));
    const MeanCI m = mc_mean_ci(vals, 0.95);
    VerdictReport r = make_report(ctx, "laplace-bessel2");
    r.statistic = std::abs(m.mean - 0.75);
    r.threshold = tol;
    r.n = n;
    r.pass = r.statistic <= tol;
    r.notes = "estimate " + fmt(m.mean) + " (se " + fmt(m.std_error, 3) + ") vs 0.75";
    return r;
}

// ---------------------------------------------------------------------------
// 4. hitting-path

VerdictReport check_hitting(CheckContext& ctx) {
    const double b = 0.5;
    const double eps = ctx.cfg.eps.value_or(0.01);
    const std::uint64_t n = ctx.n_or(5000);
    const double dt = ctx.dt_or(1e-4);
    ks_power_guard(n, n, ctx.cfg.alpha_level, absorption_law_distance(2.0, 3.0, b), "hitting-path");
    SnakeConfig sc;
    sc.eps = eps;
    sc.ds = ctx.cfg.ds.value_or(sc.ds);
    sc.focus_level = -b;
    sc.hit_level = -b;
    std::size_t tried = 0;
    const auto durations = collect<double>(n, 1000 * n + 100000, ctx.cfg.threads, [&](std::size_t i) -> std::optional<double> {
        RngStream rng = ctx.stream(0, i);
        const SnakeTrajectory tr = simulate_snake(sc, rng);
        const auto path = first_hit_path(tr, b);
        if (!path) return std::nullopt;
        return path->lifetime();
    }, &tried);
    const auto oracle = parallel_map<double>(n, [&](std::size_t i) {
        RngStream rng = ctx.stream(1, i);
        return bessel_duration(2.0, b, dt, rng);
    }, ctx.cfg.threads);
    Table t{"hitting-path", {"index", "snake_duration", "bessel_duration"}, {}};
    for (std::size_t i = 0; i < n; ++i) t.add({static_cast<double>(i), durations[i], oracle[i]});
    ctx.tables.push_back(std::move(t));
    const TestResult ks = ks_two_sample(durations, oracle);
    const double freq = static_cast<double>(n) / static_cast<double>(tried);
    VerdictReport r = make_report(ctx, "hitting-path");
    r.statistic = ks.statistic;
    r.p_value = ks.p_value;
    r.threshold = ctx.cfg.alpha_level;
    r.n = n;
    r.pass = ks.p_value > ctx.cfg.alpha_level;
    // Diagnostic only: the criterion is the two-sample test above.
    const TestResult exact = ks_one_sample(durations, [&](double x) { return bessel_absorption_cdf(2.0, b, x); });
    r.notes = "two-sample KS D=" + fmt(ks.statistic, 4) + "; vs the exact Gamma law D=" + fmt(exact.statistic, 4) +
              " p=" + fmt(exact.p_value, 3) + "; mean duration " +
              fmt(std::accumulate(durations.begin(), durations.end(), 0.0) / n, 4) + " vs b^2/3 = " + fmt(b * b / 3, 4) +
              "; hit frequency " + fmt(freq, 4) + " over " + std::to_string(tried) + " excursions (3 eps/b^2 = " +
              fmt(3 * eps / (b * b), 4) + ")";
    return r;
}

// ---------------------------------------------------------------------------
// Snakes conditioned on W_* in [-1.05, -0.95]; shared by minimizer-law and
// the snake half of spine-poisson.

struct WindowSample {
    double a;
    double duration;
    std::uint64_t hat_deep;
    std::uint64_t check_deep;
    double lambda;
};

struct WindowSweep {
    std::vector<WindowSample> samples;
    std::size_t tried = 0;
};

constexpr double kWindowLo = -1.05;
constexpr double kWindowHi = -0.95;
// Deep-subtree band for the snake decomposition: minima at or below -0.75
// (c = a - 0.75, about a/4 inside the window) attached at or above -0.625.
constexpr double kBandLevel = -0.75;
constexpr double kBandGap = 0.125;

// The minimizing path through the checkpoint tree, with every edge filled in
// at spacing h from its conditional law: Brownian bridges, or bridges kept
// above the edge floor.
FinitePath fill_min_path(const SnakeTrajectory& tr, double h, RngStream& rng) {
    const auto& nodes = tr.tree().nodes;
    std::vector<std::size_t> chain;
    for (auto id = static_cast<std::int64_t>(tr.min_node()); id >= 0; id = nodes[static_cast<std::size_t>(id)].parent)
        chain.push_back(static_cast<std::size_t>(id));
    std::reverse(chain.begin(), chain.end());
    std::vector<double> t{nodes[chain[0]].t};
    std::vector<double> x{nodes[chain[0]].x};
    for (std::size_t k = 1; k < chain.size(); ++k) {
        const PathNode& c = nodes[chain[k]];
        const double t0 = t.back();
        const auto pieces = static_cast<std::size_t>(std::ceil((c.t - t0) / h));
        for (std::size_t j = 1; j < pieces; ++j) {
            const double tn = t0 + (c.t - t0) * static_cast<double>(j) / static_cast<double>(pieces);
            double xn;
            if (std::isfinite(c.floor)) {
                xn = c.floor + bessel3_bridge_point(t.back(), std::max(0.0, x.back() - c.floor), c.t,
                                                    std::max(0.0, c.x - c.floor), tn, rng);
            } else {
                xn = bridge_point(t.back(), x.back(), c.t, c.x, tn, rng);
            }
            t.push_back(tn);
            x.push_back(xn);
        }
        if (c.t > t.back()) {
            t.push_back(c.t);
            x.push_back(c.x);
        }
    }
    return FinitePath(std::move(t), std::move(x));
}

struct RungSpec {
    int depth;
    double dt;
    double ds;
    bool decompose;
};

WindowSweep run_window_sweep(const RunConfig& cfg, std::uint32_t tag, std::uint32_t sub, std::size_t want, const RungSpec& rung) {
    SnakeConfig sc;
    sc.eps = cfg.eps.value_or(0.05);
    sc.ds = rung.ds;
    sc.dt = rung.dt;
    sc.refine_depth = rung.depth;
    sc.focus_level = kWindowHi;
    if (rung.decompose) {
        sc.watch_level = kBandLevel;
        sc.watch_floor = kWindowLo;
    }
    WindowSweep out;
    out.samples = collect<WindowSample>(want, 2000 * want + 100000, cfg.threads, [&](std::size_t i) -> std::optional<WindowSample> {
        RngStream rng(cfg.master_seed, stream_id(tag, sub, i));
        const SnakeTrajectory tr = simulate_snake(sc, rng);
        if (tr.wstar() < kWindowLo || tr.wstar() > kWindowHi) return std::nullopt;
        WindowSample w{-tr.wstar(), tr.min_path().lifetime(), 0, 0, 0.0};
        if (rung.decompose) {
            const double a = w.a;
            const double c = a + kBandLevel;
            const auto records = subtree_decomposition(tr);
            for (const auto& rec : records) {
                if (!(rec.min_value <= kBandLevel && rec.attach_value >= kBandLevel + kBandGap)) continue;
                (rec.side == Side::hat ? w.hat_deep : w.check_deep) += 1;
            }
            RngStream fill = rng.split(0x46494C4C);
            w.lambda = deep_subtree_intensity(fill_min_path(tr, 1e-4, fill), a, c, kBandGap);
        }
        return w;
    }, &out.tried);
    return out;
}

// Memo so that minimizer-law and spine-poisson share one sweep per config.
std::mutex memo_mutex;
std::map<std::string, std::shared_ptr<const WindowSweep>> window_memo;

std::shared_ptr<const WindowSweep> finest_window_sweep(const RunConfig& cfg, std::size_t want) {
    const double dt = cfg.dt.value_or(1e-2);
    const double ds = cfg.ds.value_or(1e-6);
    const std::string key = cfg.to_json() + "|" + std::to_string(want);
    {
        std::lock_guard<std::mutex> lock(memo_mutex);
        const auto it = window_memo.find(key);
        if (it != window_memo.end()) return it->second;
    }
    auto sweep = std::make_shared<const WindowSweep>(run_window_sweep(cfg, 5, 2, want, {16, dt / 4, ds / 4, true}));
    std::lock_guard<std::mutex> lock(memo_mutex);
    window_memo[key] = sweep;
    return sweep;
}

// ---------------------------------------------------------------------------
// 5. minimizer-law

VerdictReport check_minimizer(CheckContext& ctx) {
    const std::uint64_t n = ctx.n_or(2000);
    const double tol = 0.05;
    const double bdt = ctx.dt_or(1e-4);
    // Several independent oracle draws per accepted sample shrink the oracle
    // side's share of the KS noise.
    const std::size_t per_sample = 10;
    const double null_crit = ks_critical_distance(static_cast<double>(n) * (n * per_sample) / (n + n * per_sample),
                                                  ctx.cfg.alpha_level);
    guard(null_crit < tol, "minimizer-law: n too small, the null KS distance would exceed the tolerance");
    const double dt = ctx.cfg.dt.value_or(1e-2);
    const double ds = ctx.cfg.ds.value_or(1e-6);
    // Refinement ladder: each rung resolves s to a finer step and halves the
    // checkpoint spacing and the s-grid floor.
    const std::vector<RungSpec> rungs = {{0, dt, ds, false}, {4, dt / 2, ds / 2, false}, {16, dt / 4, ds / 4, true}};
    std::vector<double> dists;
    std::vector<std::size_t> tried;
    std::vector<double> means;
    TestResult finest{};
    Table t{"minimizer-law", {"rung", "index", "a", "duration", "oracle_duration"}, {}};
    for (std::size_t k = 0; k < rungs.size(); ++k) {
        std::shared_ptr<const WindowSweep> sweep;
        if (k + 1 == rungs.size()) {
            sweep = finest_window_sweep(ctx.cfg, n);
        } else {
            sweep = std::make_shared<const WindowSweep>(run_window_sweep(ctx.cfg, 5, static_cast<std::uint32_t>(k), n, rungs[k]));
        }
        std::vector<double> durs;
        for (const auto& s : sweep->samples) durs.push_back(s.duration);
        const auto oracle = parallel_map<double>(n * per_sample, [&](std::size_t j) {
            RngStream rng = ctx.stream(static_cast<std::uint32_t>(10 + k), j);
            return bessel_duration(3.0, sweep->samples[j / per_sample].a, bdt, rng);
        }, ctx.cfg.threads);
        for (std::size_t i = 0; i < n; ++i)
            t.add({static_cast<double>(k), static_cast<double>(i), sweep->samples[i].a, durs[i], oracle[i * per_sample]});
        const TestResult ks = ks_two_sample(durs, oracle);
        dists.push_back(ks.statistic);
        tried.push_back(sweep->tried);
        double m = 0.0;
        for (const auto& s : sweep->samples) m += s.duration / (s.a * s.a);
        means.push_back(m / static_cast<double>(n));
        if (k + 1 == rungs.size()) finest = ks;
    }
    ctx.tables.push_back(std::move(t));
    bool monotone = true;
    for (std::size_t k = 1; k < dists.size(); ++k) monotone = monotone && dists[k] < dists[k - 1];
    VerdictReport r = make_report(ctx, "minimizer-law");
    r.statistic = finest.statistic;
    r.p_value = finest.p_value;
    r.threshold = tol;
    r.n = n;
    r.pass = finest.statistic <= tol && monotone;
    std::string ladder;
    for (std::size_t k = 0; k < dists.size(); ++k)
        ladder += (k ? ", " : "") + std::string("depth ") + std::to_string(rungs[k].depth) + ": D=" + fmt(dists[k], 4) +
                  " mean d/a^2=" + fmt(means[k], 4) + " window freq=" + fmt(static_cast<double>(n) / tried[k], 4);
    r.notes = "KS distance at the finest rung " + fmt(finest.statistic, 4) + " (p=" + fmt(finest.p_value, 3) +
              "); trend " + (monotone ? "monotone" : "NOT monotone") + " [" + ladder + "]; E[T^(3)]/a^2 = 0.2";
    return r;
}

// ---------------------------------------------------------------------------
// 6. integral-form

VerdictReport check_integral(CheckContext& ctx) {
    const std::uint64_t n = ctx.n_or(20000);
    const double tol = 0.02;
    const double a0 = 0.5;
    const double dt = ctx.dt_or(1e-4);
    guard(1.63 / std::sqrt(static_cast<double>(n)) <= 0.75 * tol, "integral-form: n too small for the tolerance");
    struct Row {
        double a, d;
    };
    const auto rows = parallel_map<Row>(n, [&](std::size_t i) {
        RngStream rng = ctx.stream(0, i);
        const double a = sample_wstar_conditioned(a0, rng);
        return Row{a, sample_minimizing_path(a, dt, rng).lifetime()};
    }, ctx.cfg.threads);
    std::vector<double> as, ds;
    Table t{"integral-form", {"replicate", "a", "duration"}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        as.push_back(rows[i].a);
        ds.push_back(rows[i].d);
        t.add({static_cast<double>(i), rows[i].a, rows[i].d});
    }
    ctx.tables.push_back(std::move(t));
    auto quantiles = [](std::vector<double> v, std::size_t k) {
        std::sort(v.begin(), v.end());
        std::vector<double> q;
        for (std::size_t j = 1; j <= k; ++j) q.push_back(v[std::min(v.size() - 1, j * v.size() / (k + 1))]);
        q.push_back(kInf);
        return q;
    };
    const auto xs = quantiles(as, 39);
    const auto ts = quantiles(ds, 39);
    double sup = 0.0;
    for (double x : xs) {
        for (double tt : ts) {
            if (!std::isfinite(tt)) continue;
            std::size_t c = 0;
            for (std::size_t i = 0; i < rows.size(); ++i) c += (rows[i].a <= x && rows[i].d <= tt) ? 1 : 0;
            const double emp = static_cast<double>(c) / static_cast<double>(n);
            // 2 a0^2 int_{a0}^x a^-3 P_a(T^(3) <= t) da, in u = a0^2 / a^2.
            const double ulo = std::isfinite(x) ? a0 * a0 / (x * x) : 0.0;
            const double exact = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                [&](double u) { return u <= 0.0 ? 1.0 : bessel_absorption_cdf(3.0, a0 / std::sqrt(u), tt); }, ulo, 1.0, 10,
                1e-10);
            sup = std::max(sup, std::abs(emp - exact));
        }
    }
    VerdictReport r = make_report(ctx, "integral-form");
    r.statistic = sup;
    r.threshold = tol;
    r.n = n;
    r.pass = sup <= tol;
    r.notes = "sup over a 40x39 quantile grid of |empirical joint CDF - quadrature|; P_a(T^(3) <= t) from the Gamma(7/2) law";
    return r;
}

// ---------------------------------------------------------------------------
// Spine batch shared by spine-poisson and spine-independence.

struct SpineRow {
    std::uint64_t hat, check;
    double lambda;
    std::size_t hat_proposals, check_proposals;
    double wstar_check;
};

std::map<std::string, std::shared_ptr<const std::vector<SpineRow>>> spine_memo;

constexpr double kSpineA = 1.0;
constexpr double kSpineC = 0.25;
constexpr double kSpineGap = 0.125;

std::shared_ptr<const std::vector<SpineRow>> spine_batch(const RunConfig& cfg, std::size_t n) {
    const std::string key = cfg.to_json() + "|" + std::to_string(n);
    {
        std::lock_guard<std::mutex> lock(memo_mutex);
        const auto it = spine_memo.find(key);
        if (it != spine_memo.end()) return it->second;
    }
    const double dt = cfg.dt.value_or(1e-4);
    SubtreeSamplerConfig sc;
    sc.trunc_eps = cfg.trunc_eps.value_or(5e-4);
    sc.snake.ds = cfg.ds.value_or(sc.snake.ds);
    sc.snake.max_steps = 200;
    sc.band = kSpineC;
    auto rows = std::make_shared<const std::vector<SpineRow>>(parallel_map<SpineRow>(n, [&](std::size_t i) {
        RngStream rng(cfg.master_seed, stream_id(7, 0, i));
        const FinitePath path = sample_minimizing_path(kSpineA, dt, rng);
        const SpineSample s = sample_spine_subtrees(path, kSpineA, sc, rng);
        return SpineRow{count_deep(s.hat_records, kSpineA, kSpineC, kSpineGap), count_deep(s.check_records, kSpineA, kSpineC, kSpineGap),
                        deep_subtree_intensity(path, kSpineA, kSpineC, kSpineGap), s.hat_proposals, s.check_proposals,
                        reconstruct_wstar(s)};
    }, cfg.threads));
    std::lock_guard<std::mutex> lock(memo_mutex);
    spine_memo[key] = rows;
    return rows;
}

// ---------------------------------------------------------------------------
// 7. spine-poisson

VerdictReport check_spine_poisson(CheckContext& ctx) {
    const std::uint64_t n = ctx.n_or(5000);
    const auto rows = spine_batch(ctx.cfg, n);
    std::vector<std::uint64_t> counts;
    std::vector<double> lambdas;
    double lam_sum = 0.0;
    double obs_sum = 0.0;
    bool wstar_ok = true;
    Table t{"spine-poisson", {"source", "index", "hat_deep", "check_deep", "lambda"}, {}};
    for (std::size_t i = 0; i < rows->size(); ++i) {
        const SpineRow& r = (*rows)[i];
        counts.push_back(r.hat);
        counts.push_back(r.check);
        lambdas.push_back(r.lambda);
        lambdas.push_back(r.lambda);
        lam_sum += 2 * r.lambda;
        obs_sum += static_cast<double>(r.hat + r.check);
        wstar_ok = wstar_ok && r.wstar_check == -kSpineA;
        t.add({0.0, static_cast<double>(i), static_cast<double>(r.hat), static_cast<double>(r.check), r.lambda});
    }
    // Power: a 20% error in the rate shifts the mean count by 0.2 Lambda;
    // require a noncentrality of at least 20 for that alternative.
    guard(0.04 * lam_sum >= 20.0, "spine-poisson: too few spines to detect a 20% rate error");
    const TestResult spine = chi_square_poisson_mixture(counts, lambdas);

    // Same test on the decomposition of simulated snakes with W_* near -1.
    const std::uint64_t n_snake = ctx.cfg.n ? std::max<std::uint64_t>(200, n * 2 / 5) : 2000;
    const auto sweep = finest_window_sweep(ctx.cfg, n_snake);
    std::vector<std::uint64_t> scounts;
    std::vector<double> slambdas;
    double s_obs = 0.0;
    double s_lam = 0.0;
    for (std::size_t i = 0; i < sweep->samples.size(); ++i) {
        const auto& w = sweep->samples[i];
        scounts.push_back(w.hat_deep);
        scounts.push_back(w.check_deep);
        slambdas.push_back(w.lambda);
        slambdas.push_back(w.lambda);
        s_obs += static_cast<double>(w.hat_deep + w.check_deep);
        s_lam += 2 * w.lambda;
        t.add({1.0, static_cast<double>(i), static_cast<double>(w.hat_deep), static_cast<double>(w.check_deep), w.lambda});
    }
    ctx.tables.push_back(std::move(t));
    const TestResult snake = chi_square_poisson_mixture(scounts, slambdas);
    const double relaxed = ctx.cfg.alpha_level / 10.0;
    VerdictReport r = make_report(ctx, "spine-poisson");
    // The headline is the spine sampler unless only the snake half fails.
    const bool snake_decides = spine.p_value > ctx.cfg.alpha_level && !(snake.p_value > relaxed);
    r.statistic = snake_decides ? snake.statistic : spine.statistic;
    r.p_value = snake_decides ? snake.p_value : spine.p_value;
    r.threshold = snake_decides ? relaxed : ctx.cfg.alpha_level;
    r.n = snake_decides ? sweep->samples.size() : n;
    r.pass = spine.p_value > ctx.cfg.alpha_level && snake.p_value > relaxed && wstar_ok;
    r.notes = "spine sampler: chi2=" + fmt(spine.statistic, 4) + " p=" + fmt(spine.p_value, 3) + ", mean count " +
              fmt(obs_sum / (2.0 * n), 4) + " vs mean Lambda " + fmt(lam_sum / (2.0 * n), 4) +
              "; snake decomposition (" + std::to_string(sweep->samples.size()) + " excursions, p > " + fmt(relaxed, 2) +
              "): chi2=" + fmt(snake.statistic, 4) + " p=" + fmt(snake.p_value, 3) + ", mean count " +
              fmt(s_obs / (2.0 * sweep->samples.size()), 4) + " vs " + fmt(s_lam / (2.0 * sweep->samples.size()), 4) +
              (wstar_ok ? "" : "; a spine sample had a subtree below -a");
    return r;
}

// ---------------------------------------------------------------------------
// 8. spine-independence

VerdictReport check_spine_independence(CheckContext& ctx) {
    const std::uint64_t n = ctx.n_or(5000);
    const double tol = 0.05;
    guard(3.0 / std::sqrt(static_cast<double>(n)) <= tol, "spine-independence: n too small for the correlation tolerance");
    const auto rows = spine_batch(ctx.cfg, n);
    std::vector<std::vector<double>> table(3, std::vector<double>(3, 0.0));
    std::vector<double> h, c;
    Table t{"spine-independence", {"index", "hat_deep", "check_deep", "lambda", "hat_pit", "check_pit"}, {}};
    for (std::size_t i = 0; i < rows->size(); ++i) {
        const SpineRow& r = (*rows)[i];
        RngStream rng = ctx.stream(0, i);
        const double uh = poisson_pit(r.hat, r.lambda, rng.uniform());
        const double uc = poisson_pit(r.check, r.lambda, rng.uniform());
        table[std::min<std::size_t>(2, static_cast<std::size_t>(3 * uh))][std::min<std::size_t>(2, static_cast<std::size_t>(3 * uc))] += 1;
        h.push_back(static_cast<double>(r.hat) - r.lambda);
        c.push_back(static_cast<double>(r.check) - r.lambda);
        t.add({static_cast<double>(i), static_cast<double>(r.hat), static_cast<double>(r.check), r.lambda, uh, uc});
    }
    ctx.tables.push_back(std::move(t));
    const TestResult ind = chi_square_independence(table);
    const double rho = pearson_correlation(h, c);
    VerdictReport r = make_report(ctx, "spine-independence");
    r.statistic = ind.statistic;
    r.p_value = ind.p_value;
    r.threshold = ctx.cfg.alpha_level;
    r.n = n;
    r.pass = ind.p_value > ctx.cfg.alpha_level && std::abs(rho) <= tol;
    r.notes = "3x3 PIT-tercile table chi2=" + fmt(ind.statistic, 4) + " p=" + fmt(ind.p_value, 3) +
              "; correlation of centred counts " + fmt(rho, 3) + " (tolerance 0.05)";
    return r;
}

// ---------------------------------------------------------------------------
// 9. reversal-williams

VerdictReport check_reversal(CheckContext& ctx) {
    const std::uint64_t n = ctx.n_or(10000);
    const double dt = ctx.dt_or(1e-4);
    ks_power_guard(n, n, ctx.cfg.alpha_level, absorption_law_distance(3.0, 2.0, 1.0), "reversal-williams");
    struct Row {
        double dur, mid;
    };
    const auto fwd = parallel_map<Row>(n, [&](std::size_t i) {
        RngStream rng = ctx.stream(0, i);
        const SamplePath p = simulate_bessel(BesselConfig::with_defaults(3.0, 1.0, dt), rng);
        if (p.stop != StopReason::absorbed) throw std::runtime_error("reversal-williams: horizon reached");
        return Row{p.duration(), p.value_at(0.5 * p.duration())};
    }, ctx.cfg.threads);
    const auto rev = parallel_map<Row>(n, [&](std::size_t i) {
        RngStream rng = ctx.stream(1, i);
        const SamplePath p = sample_bessel9_to_last_passage(1.0, dt, 10.0, rng);
        return Row{p.duration(), p.value_at(0.5 * p.duration())};
    }, ctx.cfg.threads);
    std::vector<double> d1, d2, m1, m2;
    Table t{"reversal-williams", {"index", "absorption_time", "absorption_mid_value", "last_passage_time", "last_passage_mid_value"}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        d1.push_back(fwd[i].dur);
        m1.push_back(fwd[i].mid);
        d2.push_back(rev[i].dur);
        m2.push_back(rev[i].mid);
        t.add({static_cast<double>(i), fwd[i].dur, fwd[i].mid, rev[i].dur, rev[i].mid});
    }
    ctx.tables.push_back(std::move(t));
    const TestResult kd = ks_two_sample(d1, d2);
    const TestResult km = ks_two_sample(m1, m2);
    VerdictReport r = make_report(ctx, "reversal-williams");
    r.statistic = std::max(kd.statistic, km.statistic);
    r.p_value = std::min(kd.p_value, km.p_value);
    r.threshold = ctx.cfg.alpha_level;
    r.n = n;
    r.pass = *r.p_value > ctx.cfg.alpha_level;
    r.notes = "durations D=" + fmt(kd.statistic, 4) + " p=" + fmt(kd.p_value, 3) + "; mid-duration values D=" +
              fmt(km.statistic, 4) + " p=" + fmt(km.p_value, 3);
    return r;
}

// ---------------------------------------------------------------------------
// 10. super-min-cdf

FiniteMeasure1D three_atom_fixture() { return FiniteMeasure1D({{0.0, 0.5}, {0.7, 1.0}, {1.5, 2.0}}); }

VerdictReport check_super_cdf(CheckContext& ctx) {
    const std::uint64_t n = ctx.n_or(100000);
    const double tol = 0.01;
    guard(ks_critical_distance(static_cast<double>(n), ctx.cfg.alpha_level) < tol,
          "super-min-cdf: n too small, the null KS distance would exceed the tolerance");
    const std::vector<std::pair<std::string, FiniteMeasure1D>> fixtures = {{"delta1", FiniteMeasure1D({{1.0, 1.0}})},
                                                                           {"three_atoms", three_atom_fixture()}};
    double worst_d = 0.0;
    double worst_p = 1.0;
    std::string notes;
    Table t{"super-min-cdf", {"fixture", "index", "inverse_cdf_mX", "poisson_mX_below_floor", "inverse_cdf_mX_below_floor"}, {}};
    std::uint32_t sub = 0;
    for (std::size_t f = 0; f < fixtures.size(); ++f) {
        const auto& mu = fixtures[f].second;
        const double m = mu.m();
        const auto xs = parallel_map<double>(n, [&](std::size_t i) {
            RngStream rng = ctx.stream(sub, i);
            return sample_mX(mu, rng);
        }, ctx.cfg.threads);
        const TestResult ks = ks_one_sample(xs, [&](double x) { return x < m ? 1.0 - cdf_mX(mu, x) : 1.0; });
        // Mutual check of the two samplers below the floor L = m - 0.5.
        const double floor = m - 0.5;
        std::size_t tried = 0;
        const auto below = collect<double>(n, 100 * n, ctx.cfg.threads, [&](std::size_t i) -> std::optional<double> {
            RngStream rng = ctx.stream(sub + 1, i);
            const double x = sample_mX(mu, rng);
            if (x < floor) return x;
            return std::nullopt;
        }, &tried);
        const auto poisson = parallel_map<double>(n, [&](std::size_t i) {
            RngStream rng = ctx.stream(sub + 2, i);
            for (int attempt = 0; attempt < 100000; ++attempt)
                if (const auto y = poisson_min_construction(mu, floor, rng)) return *y;
            throw std::runtime_error("super-min-cdf: Poisson construction never went below the floor");
        }, ctx.cfg.threads);
        sub += 3;
        const TestResult mutual = ks_two_sample(below, poisson);
        for (std::size_t i = 0; i < n; ++i) t.add({static_cast<double>(f), static_cast<double>(i), xs[i], poisson[i], below[i]});
        worst_d = std::max(worst_d, ks.statistic);
        worst_p = std::min(worst_p, mutual.p_value);
        notes += fixtures[f].first + ": sup |ECDF - cdf| = " + fmt(ks.statistic, 4) + ", mutual KS below " + fmt(floor, 3) +
                 " D=" + fmt(mutual.statistic, 4) + " p=" + fmt(mutual.p_value, 3) + "; ";
    }
    ctx.tables.push_back(std::move(t));
    VerdictReport r = make_report(ctx, "super-min-cdf");
    r.statistic = worst_d;
    r.p_value = worst_p;
    r.threshold = tol;
    r.n = n;
    r.pass = worst_d < tol && worst_p > ctx.cfg.alpha_level;
    r.notes = notes + "fixture three_atoms = {(0, 0.5), (0.7, 1), (1.5, 2)}";
    return r;
}

// ---------------------------------------------------------------------------
// 11. super-joint

double integrate_below_zero(const std::function<double(double)>& f) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double v) { return f(-v); }, 0.0, kInf);
}

VerdictReport check_super_joint(CheckContext& ctx) {
    const std::uint64_t n = ctx.n_or(100000);
    const FiniteMeasure1D mu({{1.0, 1.0}, {2.0, 1.0}});
    const double num = integrate_below_zero([&](double y) { return joint_density_wmin0(mu, 1.0, y); });
    const double den = integrate_below_zero([&](double y) { return joint_density_wmin0(mu, kInf, y); });
    const double p = num / den;
    // Alternative for the power guard: atom weights mass / (u - y)^2.
    auto alt_density = [&](double y, bool first_only) {
        const double w1 = 1.0 / ((1.0 - y) * (1.0 - y));
        const double w2 = 1.0 / ((2.0 - y) * (2.0 - y));
        const double tot = 1.0 / std::pow(1.0 - y, 3) + 1.0 / std::pow(2.0 - y, 3);
        return 3.0 * tot * std::exp(-1.5 * mu.exponent(y)) * (first_only ? w1 / (w1 + w2) : 1.0);
    };
    const double p_alt = integrate_below_zero([&](double y) { return alt_density(y, true); }) /
                         integrate_below_zero([&](double y) { return alt_density(y, false); });
    const double cond_prob = 1.0 - cdf_mX(mu, 0.0);
    const double sigma_expected = std::sqrt(p * (1 - p) / (cond_prob * static_cast<double>(n)));
    guard(6.0 * sigma_expected < std::abs(p - p_alt), "super-joint: n too small to separate the alternative weights");
    struct Row {
        double m, w0;
    };
    const auto rows = parallel_map<Row>(n, [&](std::size_t i) {
        RngStream rng = ctx.stream(0, i);
        const SuperMinSample s = sample_wmin_endpoints(mu, rng);
        return Row{s.m_X, s.w0 ? *s.w0 : std::nan("")};
    }, ctx.cfg.threads);
    std::size_t cond = 0;
    std::size_t ones = 0;
    Table t{"super-joint", {"replicate", "m_X", "w0"}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].m <= 0.0) {
            ++cond;
            ones += rows[i].w0 == 1.0 ? 1 : 0;
        }
        t.add({static_cast<double>(i), rows[i].m, rows[i].w0});
    }
    ctx.tables.push_back(std::move(t));
    const double phat = static_cast<double>(ones) / static_cast<double>(cond);
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(cond));
    VerdictReport r = make_report(ctx, "super-joint");
    r.statistic = std::abs(phat - p) / sigma;
    r.threshold = 3.0;
    r.n = n;
    r.pass = r.statistic <= 3.0;
    r.notes = "P(w0 = 1 | m_X <= 0): sampler " + fmt(phat) + " over " + std::to_string(cond) + " draws vs quadrature " +
              fmt(p) + "; statistic in binomial standard errors";
    return r;
}

// ---------------------------------------------------------------------------
// 12. super-path

VerdictReport check_super_path(CheckContext& ctx) {
    const std::uint64_t n = ctx.n_or(5000);
    const double dt = ctx.dt_or(1e-4);
    ks_power_guard(n, n, ctx.cfg.alpha_level, absorption_law_distance(3.0, 2.0, 2.0), "super-path");
    const FiniteMeasure1D mu({{1.0, 1.0}});
    struct Row {
        double m, w0, dur;
    };
    std::size_t tried = 0;
    const auto rows = collect<Row>(n, 1000 * n, ctx.cfg.threads, [&](std::size_t i) -> std::optional<Row> {
        RngStream rng = ctx.stream(0, i);
        SuperMinSample s = sample_wmin_endpoints(mu, rng);
        if (s.m_X < -1.1 || s.m_X > -0.9) return std::nullopt;
        attach_wmin_path(s, dt, rng);
        return Row{s.m_X, *s.w0, s.duration()};
    }, &tried);
    const auto oracle = parallel_map<double>(n, [&](std::size_t i) {
        RngStream rng = ctx.stream(1, i);
        return bessel_duration(3.0, rows[i].w0 - rows[i].m, dt, rng);
    }, ctx.cfg.threads);
    std::vector<double> d;
    Table t{"super-path", {"index", "m_X", "w0", "duration", "oracle_duration"}, {}};
    for (std::size_t i = 0; i < n; ++i) {
        d.push_back(rows[i].dur);
        t.add({static_cast<double>(i), rows[i].m, rows[i].w0, rows[i].dur, oracle[i]});
    }
    ctx.tables.push_back(std::move(t));
    const TestResult ks = ks_two_sample(d, oracle);
    // The exact law of the duration given m_X, for the notes.
    std::vector<double> u;
    for (const auto& row : rows) u.push_back(bessel_absorption_cdf(3.0, row.w0 - row.m, row.dur));
    const TestResult exact = ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); });
    VerdictReport r = make_report(ctx, "super-path");
    r.statistic = ks.statistic;
    r.p_value = ks.p_value;
    r.threshold = ctx.cfg.alpha_level;
    r.n = n;
    r.pass = ks.p_value > ctx.cfg.alpha_level;
    r.notes = "two-sample KS vs Bessel draws D=" + fmt(ks.statistic, 4) + " p=" + fmt(ks.p_value, 3) +
              "; against the exact Gamma(7/2) law p=" + fmt(exact.p_value, 3) + "; window acceptance " +
              fmt(static_cast<double>(n) / tried, 3);
    return r;
}

using CheckFn = VerdictReport (*)(CheckContext&);

const std::vector<std::pair<std::string, CheckFn>>& registry() {
    static const std::vector<std::pair<std::string, CheckFn>> r = {
        {"law-wstar", check_law_wstar},
        {"girsanov-identity", check_girsanov},
        {"laplace-bessel2", check_laplace},
        {"hitting-path", check_hitting},
        {"minimizer-law", check_minimizer},
        {"integral-form", check_integral},
        {"spine-poisson", check_spine_poisson},
        {"spine-independence", check_spine_independence},
        {"reversal-williams", check_reversal},
        {"super-min-cdf", check_super_cdf},
        {"super-joint", check_super_joint},
        {"super-path", check_super_path},
    };
    return r;
}

}  // namespace

double bessel_absorption_cdf(double alpha, double r0, double t) {
    if (!(alpha > 0.5) || !(r0 > 0.0)) throw std::invalid_argument("bessel_absorption_cdf: need alpha > 1/2 and r0 > 0");
    if (!(t > 0.0)) return 0.0;
    if (!std::isfinite(t)) return 1.0;
    return boost::math::gamma_q(alpha + 0.5, r0 * r0 / (2.0 * t));
}

void RunConfig::validate() const {
    if (n && *n == 0) throw ConfigError("n must be positive");
    auto positive = [](const std::optional<double>& v, const char* name) {
        if (v && !(*v > 0.0 && std::isfinite(*v))) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(dt, "dt");
    positive(ds, "ds");
    positive(eps, "eps");
    positive(trunc_eps, "trunc_eps");
    if (!(alpha_level > 0.0 && alpha_level < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
}

std::string RunConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = master_seed;
    j["n"] = n ? nlohmann::json(*n) : nlohmann::json(nullptr);
    j["dt"] = dt ? nlohmann::json(*dt) : nlohmann::json(nullptr);
    j["ds"] = ds ? nlohmann::json(*ds) : nlohmann::json(nullptr);
    j["eps"] = eps ? nlohmann::json(*eps) : nlohmann::json(nullptr);
    j["trunc_eps"] = trunc_eps ? nlohmann::json(*trunc_eps) : nlohmann::json(nullptr);
    j["alpha"] = alpha_level;
    j["format"] = format;
    return j.dump();
}

RunConfig RunConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            if (v.is_null()) continue;
            if (key == "seed") c.master_seed = v.get<std::uint64_t>();
            else if (key == "n") {
                if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ConfigError("n must be a positive integer");
                c.n = v.get<std::uint64_t>();
            } else if (key == "dt") c.dt = v.get<double>();
            else if (key == "ds") c.ds = v.get<double>();
            else if (key == "eps") c.eps = v.get<double>();
            else if (key == "trunc_eps") c.trunc_eps = v.get<double>();
            else if (key == "alpha") c.alpha_level = v.get<double>();
            else if (key == "out") c.output_dir = v.get<std::string>();
            else if (key == "format") c.format = v.get<std::string>();
            else if (key == "threads") c.threads = v.get<unsigned>();
            else throw ConfigError("unknown config key: " + key);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

void RunConfig::merge_from(const RunConfig& flags, const std::vector<std::string>& set_keys) {
    for (const auto& k : set_keys) {
        if (k == "seed") master_seed = flags.master_seed;
        else if (k == "n") n = flags.n;
        else if (k == "dt") dt = flags.dt;
        else if (k == "ds") ds = flags.ds;
        else if (k == "eps") eps = flags.eps;
        else if (k == "trunc_eps") trunc_eps = flags.trunc_eps;
        else if (k == "alpha") alpha_level = flags.alpha_level;
        else if (k == "out") output_dir = flags.output_dir;
        else if (k == "format") format = flags.format;
        else if (k == "threads") threads = flags.threads;
    }
}

const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, fn] : registry()) out.push_back(name);
        return out;
    }();
    return names;
}

std::vector<VerdictReport> run_check(const std::string& name, const RunConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<std::string, CheckFn>> todo;
    for (std::size_t k = 0; k < registry().size(); ++k)
        if (name == "all" || registry()[k].first == name) todo.push_back(registry()[k]);
    if (todo.empty()) throw ConfigError("unknown check: " + name);
    std::vector<VerdictReport> reports;
    std::vector<Table> tables;
    for (const auto& [id, fn] : todo) {
        const std::uint32_t tag = static_cast<std::uint32_t>(
            std::find(check_names().begin(), check_names().end(), id) - check_names().begin() + 1);
        CheckContext ctx{cfg, tag, {}};
        const auto t0 = Clock::now();
        VerdictReport r = fn(ctx);
        r.runtime_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        reports.push_back(std::move(r));
        for (auto& t : ctx.tables) tables.push_back(std::move(t));
        if (!cfg.output_dir.empty()) {
            for (const auto& t : tables) write_table(cfg, t);
            tables.clear();
        }
    }
    if (!cfg.output_dir.empty()) {
        write_config(cfg);
        auto out = open_out(prepare_dir(cfg) / "verdicts.jsonl");
        for (const auto& r : reports) out << r.to_json() << '\n';
    }
    return reports;
}

const std::vector<std::string>& dump_kinds() {
    static const std::vector<std::string> kinds = {"snake-trajectory", "spine-sample", "super-samples", "bessel-paths"};
    return kinds;
}

std::vector<std::string> dump(const std::string& kind, const RunConfig& cfg) {
    cfg.validate();
    if (std::find(dump_kinds().begin(), dump_kinds().end(), kind) == dump_kinds().end())
        throw ConfigError("unknown dump kind: " + kind);
    if (cfg.output_dir.empty()) throw ConfigError("dump needs an output directory (--out)");
    const auto dir = prepare_dir(cfg);
    write_config(cfg);
    std::vector<std::string> files;
    const std::uint64_t n = cfg.n.value_or(kind == "super-samples" ? 1000 : kind == "bessel-paths" ? 10 : 1);
    if (kind == "snake-trajectory") {
        SnakeConfig sc;
        sc.eps = cfg.eps.value_or(sc.eps);
        sc.ds = cfg.ds.value_or(sc.ds);
        sc.dt = cfg.dt.value_or(sc.dt);
        Table t{"snake_trajectory", {"replicate", "s", "zeta", "tip"}, {}};
        for (std::uint64_t i = 0; i < n; ++i) {
            RngStream rng(cfg.master_seed, stream_id(100, 0, i));
            const SnakeTrajectory tr = simulate_snake(sc, rng);
            for (std::size_t k = 0; k < tr.size(); ++k) t.add({static_cast<double>(i), tr.s(k), tr.zeta(k), tr.tip(k)});
        }
        files.push_back(write_table(cfg, t));
    } else if (kind == "spine-sample") {
        SubtreeSamplerConfig sc;
        sc.trunc_eps = cfg.trunc_eps.value_or(sc.trunc_eps);
        sc.snake.max_steps = 200;
        sc.band = kSpineC;
        for (std::uint64_t i = 0; i < n; ++i) {
            RngStream rng(cfg.master_seed, stream_id(101, 0, i));
            const FinitePath path = sample_minimizing_path(kSpineA, cfg.dt.value_or(1e-4), rng);
            const SpineSample s = sample_spine_subtrees(path, kSpineA, sc, rng);
            const auto p = dir / ("spine_sample_" + std::to_string(i) + ".json");
            auto out = open_out(p);
            write_spine_json(s, out);
            files.push_back(p.string());
        }
    } else if (kind == "super-samples") {
        const FiniteMeasure1D mu({{1.0, 1.0}});
        std::vector<SuperMinSample> samples;
        for (std::uint64_t i = 0; i < n; ++i) {
            RngStream rng(cfg.master_seed, stream_id(102, 0, i));
            samples.push_back(sample_wmin(mu, cfg.dt.value_or(1e-4), rng));
        }
        const auto p = dir / "super_samples.csv";
        auto out = open_out(p);
        write_super_csv(samples, out);
        files.push_back(p.string());
    } else {
        Table t{"bessel_paths", {"replicate", "t", "value"}, {}};
        for (std::uint64_t i = 0; i < n; ++i) {
            RngStream rng(cfg.master_seed, stream_id(103, 0, i));
            const SamplePath p = simulate_bessel(BesselConfig::with_defaults(3.0, 1.0, cfg.dt.value_or(1e-4)), rng);
            for (std::size_t k = 0; k < p.times.size(); ++k) t.add({static_cast<double>(i), p.times[k], p.values[k]});
        }
        files.push_back(write_table(cfg, t));
    }
    return files;
}

}  // namespace snakemin
