#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "snakemin/paths.hpp"
#include "snakemin/rng.hpp"

namespace snakemin {

struct Atom {
    double u;
    double mass;
};

/// Atomic initial measure mu. `support_min` is m = inf supp(mu); it equals the
/// lowest atom unless the measure is an atomization of a continuous one
/// whose support starts lower.
class FiniteMeasure1D {
public:
    FiniteMeasure1D() = default;
    explicit FiniteMeasure1D(std::vector<Atom> atoms, std::optional<double> support_min = std::nullopt);

    /// {"atoms": [{"u": ..., "mass": ...}, ...], "support_min": optional}
    static FiniteMeasure1D from_json(const std::string& text);
    /// n atoms of mass total/n at the quantile midpoints Q((k + 1/2)/n);
    /// support_min = Q(0).
    static FiniteMeasure1D from_quantiles(const std::function<double(double)>& quantile, double total_mass, std::size_t n);

    const std::vector<Atom>& atoms() const { return atoms_; }
    double total_mass() const { return total_; }
    double m() const { return m_; }
    bool has_atom_at_m() const;

    /// I(x) = sum mass / (u - x)^2 for x < m.
    double exponent(double x) const;

    /// Every atom and m shifted by c.
    FiniteMeasure1D shifted(double c) const;
    /// Sum of the two measures.
    FiniteMeasure1D plus(const FiniteMeasure1D& other) const;

private:
    std::vector<Atom> atoms_;
    double total_ = 0.0;
    double m_ = 0.0;
};

/// P(m_X >= x) = exp(-3/2 I(x)), x < m.
double cdf_mX(const FiniteMeasure1D& mu, double x);

/// P(m_X = m): exp(-3/2 I(m)), zero when an atom sits at m.
double atom_probability(const FiniteMeasure1D& mu);

/// Inverse transform of cdf_mX; bisection on a bracket [m - 1, m) widened
/// geometrically to the left, to 1e-12 relative tolerance.
double sample_mX(const FiniteMeasure1D& mu, RngStream& rng);

/// Density in y of P(w_min(0) <= a, m_X in dy), y < m <= a. Pass
/// +infinity for a to get the density of m_X.
double joint_density_wmin0(const FiniteMeasure1D& mu, double a, double y);

struct SuperMinSample {
    double m_X = 0.0;
    std::optional<double> w0;
    FinitePath path;

    double duration() const { return path.lifetime(); }
};

/// (m_X, w_min(0)) without the path: w0 is picked among the atoms with
/// weights mass / (u - m_X)^3.
SuperMinSample sample_wmin_endpoints(const FiniteMeasure1D& mu, RngStream& rng);

/// Full sample with w_min = m_X + R^(3) from w0 - m_X until absorption. The
/// kernel runs from 1 with step dt and is mapped by Brownian scaling.
SuperMinSample sample_wmin(const FiniteMeasure1D& mu, double dt, RngStream& rng);

/// Fills in the path of a sample from sample_wmin_endpoints; sample_wmin is
/// the two calls in sequence on one stream.
void attach_wmin_path(SuperMinSample& sample, double dt, RngStream& rng);

/// Independent m_X sampler from the Poisson cloud of excursions: for each
/// atom, the excursion minima below L form a Poisson process with intensity
/// 3 mass / (u - y)^3 dy. Returns the lowest one, or nothing when no
/// excursion goes below L.
std::optional<double> poisson_min_construction(const FiniteMeasure1D& mu, double floor, RngStream& rng);

/// CSV with columns m_X,w0,duration (w0 empty when m_X = m).
void write_super_csv(const std::vector<SuperMinSample>& samples, std::ostream& out);

}  // namespace snakemin
