#include "snakemin/sde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace snakemin {

namespace {

// Skip the uniform draw when the bridge crossing probability is below e^-40.
constexpr double kCrossingExponentCutoff = 40.0;

bool bridge_crosses(double x0, double x1, double level, double h, RngStream& rng) {
    const double expo = 2.0 * (x0 - level) * (x1 - level) / h;
    if (expo > kCrossingExponentCutoff) return false;
    return rng.uniform() < std::exp(-expo);
}

SamplePath run_bessel(const BesselConfig& cfg, double level, RngStream& rng) {
    cfg.validate();
    SamplePath path;
    const std::size_t expected = static_cast<std::size_t>(
        std::min(1e7, 1.5 * cfg.r0 * cfg.r0 / std::max(2.0 * cfg.alpha - 1.0, 0.5) / cfg.dt + 16.0));
    path.times.reserve(expected);
    path.values.reserve(expected);
    path.times.push_back(0.0);

    const bool to_level = level > 0.0;
    if (cfg.r0 <= cfg.absorb_eps) {
        path.values.push_back(0.0);
        path.stop = StopReason::absorbed;
        return path;
    }
    path.values.push_back(cfg.r0);

    double t = 0.0;
    double r = cfg.r0;
    const double refine = 1.0 / (10.0 * cfg.alpha);
    while (t < cfg.max_time) {
        const double h = std::min({cfg.dt, refine * r * r, cfg.max_time - t});
        const double next = r + std::sqrt(h) * rng.normal() - cfg.alpha * h / r;
        if (to_level) {
            if (next <= level) {
                path.times.push_back(t + h * (r - level) / (r - next));
                path.values.push_back(level);
                path.stop = StopReason::level_hit;
                return path;
            }
            if (bridge_crosses(r, next, level, h, rng)) {
                path.times.push_back(t + 0.5 * h);
                path.values.push_back(level);
                path.stop = StopReason::level_hit;
                return path;
            }
        }
        t += h;
        if (next <= cfg.absorb_eps) {
            path.times.push_back(t);
            path.values.push_back(0.0);
            path.stop = StopReason::absorbed;
            return path;
        }
        path.times.push_back(t);
        path.values.push_back(next);
        r = next;
    }
    path.stop = StopReason::horizon;
    return path;
}

template <int Dim>
double norm(const std::array<double, Dim>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

template <int Dim>
SamplePath first_passage_impl(double level, double dt, RngStream& rng) {
    std::array<double, Dim> x{};
    SamplePath path;
    path.times.push_back(0.0);
    path.values.push_back(0.0);
    double t = 0.0;
    double r = 0.0;
    const double sh = std::sqrt(dt);
    for (;;) {
        const double h = dt;
        for (double& c : x) c += sh * rng.normal();
        const double next = norm<Dim>(x);
        if (next >= level) {
            path.times.push_back(t + h * (level - r) / (next - r));
            path.values.push_back(level);
            break;
        }
        if (bridge_crosses(r, next, level, h, rng)) {
            path.times.push_back(t + 0.5 * h);
            path.values.push_back(level);
            break;
        }
        t += h;
        r = next;
        path.times.push_back(t);
        path.values.push_back(r);
    }
    path.stop = StopReason::level_hit;
    return path;
}

template <int Dim>
SamplePath last_passage_impl(double a, double dt, double cutoff_mult, RngStream& rng) {
    std::array<double, Dim> x{};
    SamplePath path;
    path.times.push_back(0.0);
    path.values.push_back(0.0);
    double t = 0.0;
    double r = 0.0;
    const double cutoff = cutoff_mult * a;
    // Time of the latest passage at level a seen so far and the grid index
    // after which it happened.
    double last_time = 0.0;
    std::size_t last_index = 0;
    while (r <= cutoff) {
        const double gap = r - a;
        const double h = gap > 0.0 ? std::max(dt, 0.01 * gap * gap) : dt;
        const double sh = std::sqrt(h);
        for (double& c : x) c += sh * rng.normal();
        const double next = norm<Dim>(x);
        if (r <= a && next > a) {
            last_time = t + h * (a - r) / (next - r);
            last_index = path.times.size() - 1;
        } else if (r > a && next > a && bridge_crosses(r, next, a, h, rng)) {
            last_time = t + 0.5 * h;
            last_index = path.times.size() - 1;
        }
        t += h;
        r = next;
        path.times.push_back(t);
        path.values.push_back(r);
    }
    path.times.resize(last_index + 1);
    path.values.resize(last_index + 1);
    if (last_time > path.times.back()) {
        path.times.push_back(last_time);
        path.values.push_back(a);
    } else {
        path.values.back() = a;
    }
    path.stop = StopReason::last_passage;
    path.residual_probability = std::pow(1.0 / cutoff_mult, Dim - 2);
    return path;
}

}  // namespace

BesselConfig BesselConfig::with_defaults(double alpha, double r0, double dt) {
    BesselConfig cfg;
    cfg.alpha = alpha;
    cfg.r0 = r0;
    cfg.dt = dt;
    cfg.absorb_eps = 1e-4 * std::max(r0, 1.0);
    const double mean_time = r0 * r0 / std::max(2.0 * alpha - 1.0, 0.01);
    cfg.max_time = std::max(10.0, 2000.0 * mean_time);
    return cfg;
}

void BesselConfig::validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("BesselConfig: alpha must be positive");
    if (!(r0 >= 0.0) || !std::isfinite(r0)) throw std::invalid_argument("BesselConfig: r0 must be nonnegative");
    if (!(dt > 0.0)) throw std::invalid_argument("BesselConfig: dt must be positive");
    if (!(absorb_eps > 0.0)) throw std::invalid_argument("BesselConfig: absorb_eps must be positive");
    if (!(max_time > 0.0)) throw std::invalid_argument("BesselConfig: max_time must be positive");
    if (r0 > 0.0 && !(absorb_eps < r0))
        throw std::invalid_argument("BesselConfig: absorb_eps must be below r0");
}

SamplePath simulate_bessel(const BesselConfig& cfg, RngStream& rng) { return run_bessel(cfg, -1.0, rng); }

SamplePath simulate_bessel_to_level(const BesselConfig& cfg, double delta, RngStream& rng) {
    if (!(delta > cfg.absorb_eps) || !(delta < cfg.r0))
        throw std::invalid_argument("simulate_bessel_to_level: need absorb_eps < delta < r0");
    return run_bessel(cfg, delta, rng);
}

SamplePath simulate_brownian_to_level(double r, double delta, double dt, double max_time, RngStream& rng) {
    if (!(delta > 0.0) || !(delta < r)) throw std::invalid_argument("simulate_brownian_to_level: need 0 < delta < r");
    if (!(dt > 0.0) || !(max_time > 0.0)) throw std::invalid_argument("simulate_brownian_to_level: bad step or horizon");
    SamplePath path;
    path.times.push_back(0.0);
    path.values.push_back(r);
    double t = 0.0;
    double x = r;
    while (t < max_time) {
        const double gap = x - delta;
        const double h = std::min(std::clamp(0.01 * gap * gap, dt, std::max(dt, 0.01 * x * x)), max_time - t);
        const double next = x + std::sqrt(h) * rng.normal();
        if (next <= delta) {
            path.times.push_back(t + h * (x - delta) / (x - next));
            path.values.push_back(delta);
            path.stop = StopReason::level_hit;
            return path;
        }
        if (bridge_crosses(x, next, delta, h, rng)) {
            path.times.push_back(t + 0.5 * h);
            path.values.push_back(delta);
            path.stop = StopReason::level_hit;
            return path;
        }
        t += h;
        x = next;
        path.times.push_back(t);
        path.values.push_back(x);
    }
    path.stop = StopReason::horizon;
    return path;
}

double girsanov_martingale(const SamplePath& brownian, double alpha, double r) {
    for (double v : brownian.values)
        if (!(v > 0.0)) throw std::invalid_argument("girsanov weight: path must stay strictly positive");
    const double integral = brownian.integrate([](double b) { return 1.0 / (b * b); });
    return std::pow(r / brownian.terminal(), alpha) * std::exp(-0.5 * alpha * (1.0 + alpha) * integral);
}

double girsanov_weight(const SamplePath& brownian, double alpha, double r, double delta) {
    if (brownian.values.front() != r) throw std::invalid_argument("girsanov_weight: path must start at r");
    if (std::abs(brownian.terminal() - delta) > 1e-12 * std::max(1.0, delta))
        throw std::invalid_argument("girsanov_weight: path must end at delta");
    return girsanov_martingale(brownian, alpha, r);
}

SamplePath sample_bessel_first_passage(int dimension, double level, double dt, RngStream& rng) {
    if (!(level > 0.0) || !(dt > 0.0)) throw std::invalid_argument("sample_bessel_first_passage: bad arguments");
    switch (dimension) {
        case 3: return first_passage_impl<3>(level, dt, rng);
        case 9: return first_passage_impl<9>(level, dt, rng);
        default: throw std::invalid_argument("sample_bessel_first_passage: supported dimensions are 3 and 9");
    }
}

LifetimeExcursion sample_excursion_of_height(double height, double ds, RngStream& rng) {
    if (!(height > 0.0) || !(ds > 0.0)) throw std::invalid_argument("sample_excursion_of_height: bad arguments");
    const SamplePath up = first_passage_impl<3>(height, ds, rng);
    const SamplePath down = first_passage_impl<3>(height, ds, rng);
    LifetimeExcursion exc;
    exc.height = height;
    exc.sgrid = up.times;
    exc.zeta = up.values;
    const double t_up = up.duration();
    const double t_down = down.duration();
    exc.sgrid.reserve(up.times.size() + down.times.size());
    exc.zeta.reserve(up.times.size() + down.times.size());
    for (std::size_t k = down.times.size() - 1; k-- > 0;) {
        exc.sgrid.push_back(t_up + (t_down - down.times[k]));
        exc.zeta.push_back(down.values[k]);
    }
    exc.zeta.front() = 0.0;
    exc.zeta.back() = 0.0;
    return exc;
}

LifetimeExcursion sample_ito_excursion(double eps, double ds, RngStream& rng, std::size_t max_steps) {
    if (!(eps > 0.0) || !(ds > 0.0)) throw std::invalid_argument("sample_ito_excursion: eps and ds must be positive");
    const double height = eps / rng.uniform();
    double step = ds;
    if (max_steps > 0) step = std::max(ds, (2.0 * height * height / 3.0) / static_cast<double>(max_steps));
    return sample_excursion_of_height(height, step, rng);
}

SamplePath sample_bessel_to_last_passage(int dimension, double a, double dt, double cutoff_mult, RngStream& rng) {
    if (!(a > 0.0) || !(dt > 0.0)) throw std::invalid_argument("sample_bessel_to_last_passage: bad arguments");
    if (!(cutoff_mult >= 10.0)) throw std::invalid_argument("sample_bessel_to_last_passage: cutoff_mult must be >= 10");
    switch (dimension) {
        case 3: return last_passage_impl<3>(a, dt, cutoff_mult, rng);
        case 9: return last_passage_impl<9>(a, dt, cutoff_mult, rng);
        default: throw std::invalid_argument("sample_bessel_to_last_passage: supported dimensions are 3 and 9");
    }
}

double bridge_point(double t0, double x0, double t1, double x1, double t, RngStream& rng) {
    const double span = t1 - t0;
    if (!(span > 0.0)) throw std::invalid_argument("bridge_point: degenerate interval");
    if (!(t > t0 && t < t1)) throw std::invalid_argument("bridge_point: t must lie strictly inside (t0, t1)");
    const double w = (t - t0) / span;
    const double var = (t - t0) * (t1 - t) / span;
    return x0 + w * (x1 - x0) + std::sqrt(var) * rng.normal();
}

double bridge_crossing_probability(double x0, double x1, double level, double h) {
    if ((x0 - level) * (x1 - level) <= 0.0) return 1.0;
    return std::exp(-2.0 * (x0 - level) * (x1 - level) / h);
}

double sample_inverse_gaussian(double mu, double lambda, RngStream& rng) {
    const double nu = rng.normal();
    const double y = nu * nu;
    const double mu_y = mu * y;
    const double x = mu + (mu * mu_y) / (2.0 * lambda) -
                     (mu / (2.0 * lambda)) * std::sqrt(4.0 * mu_y * lambda + mu_y * mu_y);
    if (rng.uniform() <= mu / (mu + x)) return x;
    return mu * mu / x;
}

double bridge_argmin(double t0, double x0, double t1, double x1, double value, RngStream& rng) {
    const double span = t1 - t0;
    if (!(span > 0.0)) throw std::invalid_argument("bridge_argmin: degenerate interval");
    // Distances from the minimum to the start and to the end.
    const double below_start = x0 - value;
    const double below_end = x1 - value;
    constexpr double tiny = 1e-300;
    if (below_start <= tiny) return t0;
    if (below_end <= tiny) return t1;
    const double c_end = below_end * below_end / (2.0 * span);
    const double c_start = below_start * below_start / (2.0 * span);
    const double ratio = below_end / below_start;
    const double u = rng.uniform();
    double v;
    if (u < 1.0 / (1.0 + ratio)) {
        v = sample_inverse_gaussian(ratio, 2.0 * c_end, rng);
    } else {
        v = 1.0 / sample_inverse_gaussian(1.0 / ratio, 2.0 * c_start, rng);
    }
    return t0 + std::clamp(span / (1.0 + v), 0.0, span);
}

BridgeMinimum bridge_minimum(double t0, double x0, double t1, double x1, RngStream& rng) {
    const double span = t1 - t0;
    if (!(span > 0.0)) throw std::invalid_argument("bridge_minimum: degenerate interval");
    const double diff = x1 - x0;
    double value = 0.5 * (x0 + x1 - std::sqrt(diff * diff - 2.0 * span * std::log(rng.uniform())));
    value = std::min(value, std::min(x0, x1));
    return {bridge_argmin(t0, x0, t1, x1, value, rng), value};
}

BridgeMinimum bridge_minimum_above(double t0, double x0, double t1, double x1, double floor, RngStream& rng) {
    const double span = t1 - t0;
    if (!(span > 0.0)) throw std::invalid_argument("bridge_minimum_above: degenerate interval");
    const double lo = std::min(x0, x1);
    if (!(lo >= floor)) throw std::invalid_argument("bridge_minimum_above: endpoints below the floor");
    if (lo == floor) return {x0 <= x1 ? t0 : t1, floor};
    // P(min > y | min > floor) = (1 - exp(-2(x0-y)(x1-y)/h)) / (1 - exp(-2(x0-floor)(x1-floor)/h)).
    const double q = -rng.uniform() * std::expm1(-2.0 * (x0 - floor) * (x1 - floor) / span);
    const double c = -0.5 * span * std::log1p(-q);
    const double diff = x1 - x0;
    double value = 0.5 * (x0 + x1 - std::sqrt(diff * diff + 4.0 * c));
    value = std::clamp(value, floor, lo);
    return {bridge_argmin(t0, x0, t1, x1, value, rng), value};
}

double bessel3_bridge_point(double t0, double y0, double t1, double y1, double t, RngStream& rng) {
    const double span = t1 - t0;
    if (!(span > 0.0)) throw std::invalid_argument("bessel3_bridge_point: degenerate interval");
    const double w = (t - t0) / span;
    const double sd = std::sqrt((t - t0) * (t1 - t) / span);
    // Direction of the three-dimensional endpoint relative to the start:
    // von Mises-Fisher on the sphere with concentration y0 * y1 / span.
    const double kappa = y0 * y1 / span;
    const double u = rng.uniform();
    double c;
    if (kappa < 1e-12) {
        c = 2.0 * u - 1.0;
    } else {
        c = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
        c = std::clamp(c, -1.0, 1.0);
    }
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double px = y0 + w * (y1 * c - y0) + sd * rng.normal();
    const double py = w * (y1 * s) + sd * rng.normal();
    const double pz = sd * rng.normal();
    return std::sqrt(px * px + py * py + pz * pz);
}

}  // namespace snakemin
