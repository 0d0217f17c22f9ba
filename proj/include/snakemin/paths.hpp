#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace snakemin {

/// A stopped path w : [0, zeta] -> R sampled on an increasing time grid.
///
/// A path with a single grid point is the trivial path, identified with its
/// start value.
struct FinitePath {
    std::vector<double> times;
    std::vector<double> values;

    FinitePath() = default;
    FinitePath(std::vector<double> t, std::vector<double> v);

    static FinitePath trivial(double x) { return FinitePath({0.0}, {x}); }

    double start() const { return values.front(); }
    double endpoint() const { return values.back(); }
    double lifetime() const { return times.back(); }
    std::size_t size() const { return times.size(); }
    bool is_trivial() const { return times.size() == 1; }

    /// Linear interpolation, clamped to [0, lifetime].
    double value_at(double t) const;

    /// First time the path reaches `level` from above, interpolated linearly
    /// between the bracketing grid points; negative if never reached.
    double first_hitting_time_below(double level) const;

    /// Minimum over grid values.
    double minimum() const;

    /// Shift every value by `dx`.
    FinitePath shifted(double dx) const;

    /// Throws std::invalid_argument unless the grid starts at 0, is strictly
    /// increasing and all values are finite.
    void validate() const;
};

enum class StopReason { absorbed, level_hit, last_passage, horizon };

const char* to_string(StopReason reason);

/// Output of the one-dimensional kernels in sde_engine.
struct SamplePath {
    std::vector<double> times;
    std::vector<double> values;
    StopReason stop = StopReason::horizon;
    /// Probability that the simulated object would have revisited the stopping
    /// level after the simulation horizon (last-passage sampling only).
    double residual_probability = 0.0;

    bool stopped() const { return stop != StopReason::horizon; }
    double duration() const { return times.back(); }
    double terminal() const { return values.back(); }
    double value_at(double t) const;

    /// Trapezoid rule for the integral of f(value) over the path.
    template <class F>
    double integrate(F&& f) const {
        double acc = 0.0;
        double prev = f(values.front());
        for (std::size_t i = 1; i < times.size(); ++i) {
            const double cur = f(values[i]);
            acc += 0.5 * (prev + cur) * (times[i] - times[i - 1]);
            prev = cur;
        }
        return acc;
    }

    FinitePath to_finite_path(double shift = 0.0) const;
};

/// Lifetime excursion driving one snake excursion: zeta on the s-grid with
/// zeta(0) = zeta(sigma) = 0.
struct LifetimeExcursion {
    std::vector<double> sgrid;
    std::vector<double> zeta;
    double height = 0.0;

    double duration() const { return sgrid.back(); }
    std::size_t size() const { return sgrid.size(); }
};

/// Linear interpolation on a strictly increasing grid, clamped at both ends.
double interpolate(std::span<const double> grid, std::span<const double> values, double t);

}  // namespace snakemin
