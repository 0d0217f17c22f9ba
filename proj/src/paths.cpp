#include "snakemin/paths.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace snakemin {

double interpolate(std::span<const double> grid, std::span<const double> values, double t) {
    if (grid.empty()) throw std::invalid_argument("interpolate: empty grid");
    if (t <= grid.front()) return values.front();
    if (t >= grid.back()) return values.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    const auto hi = static_cast<std::size_t>(it - grid.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
    return values[lo] + w * (values[hi] - values[lo]);
}

FinitePath::FinitePath(std::vector<double> t, std::vector<double> v)
    : times(std::move(t)), values(std::move(v)) {
    if (times.size() != values.size() || times.empty())
        throw std::invalid_argument("FinitePath: grid and values must be non-empty and of equal length");
    if (times.front() != 0.0) throw std::invalid_argument("FinitePath: time grid must start at 0");
    if (!std::is_sorted(times.begin(), times.end()))
        throw std::invalid_argument("FinitePath: time grid must be nondecreasing");
}

double FinitePath::value_at(double t) const { return interpolate(times, values, t); }

double FinitePath::first_hitting_time_below(double level) const {
    if (values.front() <= level) return 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] <= level) {
            const double w = (values[i - 1] - level) / (values[i - 1] - values[i]);
            return times[i - 1] + w * (times[i] - times[i - 1]);
        }
    }
    return -1.0;
}

double FinitePath::minimum() const { return *std::min_element(values.begin(), values.end()); }

FinitePath FinitePath::shifted(double dx) const {
    FinitePath out = *this;
    for (double& v : out.values) v += dx;
    return out;
}

void FinitePath::validate() const {
    if (times.empty() || times.size() != values.size())
        throw std::invalid_argument("FinitePath: malformed grid");
    if (times.front() != 0.0) throw std::invalid_argument("FinitePath: grid must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw std::invalid_argument("FinitePath: grid not strictly increasing");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("FinitePath: non-finite value");
}

const char* to_string(StopReason reason) {
    switch (reason) {
        case StopReason::absorbed: return "absorbed";
        case StopReason::level_hit: return "level_hit";
        case StopReason::last_passage: return "last_passage";
        case StopReason::horizon: return "horizon";
    }
    return "unknown";
}

double SamplePath::value_at(double t) const { return interpolate(times, values, t); }

FinitePath SamplePath::to_finite_path(double shift) const {
    std::vector<double> v = values;
    for (double& x : v) x += shift;
    return FinitePath(times, std::move(v));
}

}  // namespace snakemin
