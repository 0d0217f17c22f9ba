#pragma once

#include <cstddef>

#include "snakemin/paths.hpp"
#include "snakemin/rng.hpp"

namespace snakemin {

/// Parameters of the Bessel process R^(alpha) solving dR = dB - (alpha/R) dt,
/// absorbed at 0. The dimension 1 - 2*alpha is derived, never stored.
struct BesselConfig {
    double alpha = 3.0;
    double r0 = 1.0;
    double dt = 1e-4;
    double absorb_eps = 1e-4;
    double max_time = 100.0;

    /// Defaults: dt = 1e-4, absorb_eps = 1e-4 * max(r0, 1) and a horizon of
    /// 2000 expected absorption times (at least 10 time units).
    static BesselConfig with_defaults(double alpha, double r0, double dt = 1e-4);

    double dimension() const { return 1.0 - 2.0 * alpha; }
    void validate() const;
};

/// Euler-Maruyama path of R^(alpha) from cfg.r0 until absorption or the
/// horizon. Near zero the step is reduced to R^2 / (10 alpha) so that the drift
/// displacement per step stays below R / 10. The terminal value of an absorbed
/// path is exactly 0 and its terminal time is T^(alpha).
SamplePath simulate_bessel(const BesselConfig& cfg, RngStream& rng);

/// Same kernel stopped at the first passage below `delta` (0 < delta < r0).
/// The terminal value is exactly `delta`.
SamplePath simulate_bessel_to_level(const BesselConfig& cfg, double delta, RngStream& rng);

/// Brownian motion from r stopped at its first passage at delta < r.
///
/// Steps are exact Gaussian increments of size clamp(0.01 (B - delta)^2, dt,
/// 0.01 B^2); a Brownian-bridge crossing test catches passages between grid
/// points, so the stopping time is not biased by the grid.
SamplePath simulate_brownian_to_level(double r, double delta, double dt, double max_time, RngStream& rng);

/// (r/delta)^alpha * exp(-alpha(1+alpha)/2 * int_0^{T_delta} ds / B_s^2) for a
/// Brownian path stopped at delta, the integral by trapezoid on the path grid.
double girsanov_weight(const SamplePath& brownian, double alpha, double r, double delta);

/// The martingale (r/B_t)^alpha exp(-alpha(1+alpha)/2 int_0^t ds/B_s^2) at the
/// terminal time of the path. Equals girsanov_weight for stopped paths and is
/// the unbiased replacement for paths cut at the horizon.
double girsanov_martingale(const SamplePath& brownian, double alpha, double r);

/// Lifetime excursion under the Ito measure conditioned on height > eps.
/// The height h = eps / U is drawn by inverse transform; the excursion is the
/// concatenation of two independent three-dimensional Bessel paths from 0 to
/// h, the second one reversed. When max_steps > 0 the grid step is coarsened
/// to at least (2 h^2 / 3) / max_steps.
LifetimeExcursion sample_ito_excursion(double eps, double ds, RngStream& rng, std::size_t max_steps = 0);

/// The Williams construction for a prescribed height.
LifetimeExcursion sample_excursion_of_height(double height, double ds, RngStream& rng);

/// Bessel process of integer dimension >= 2 (norm of a Brownian motion) from
/// 0, run until it exceeds cutoff_mult * a and truncated at its last passage
/// at a. `residual_probability` reports cutoff_mult^{-(dim-2)}.
SamplePath sample_bessel_to_last_passage(int dimension, double a, double dt, double cutoff_mult, RngStream& rng);

inline SamplePath sample_bessel9_to_last_passage(double a, double dt, double cutoff_mult, RngStream& rng) {
    return sample_bessel_to_last_passage(9, a, dt, cutoff_mult, rng);
}

/// First passage of a dim-dimensional Bessel process (norm of Brownian motion)
/// from 0 to `level`, with the terminal value set to exactly `level`.
SamplePath sample_bessel_first_passage(int dimension, double level, double dt, RngStream& rng);

struct BridgeMinimum {
    double time;
    double value;
};

/// Gaussian draw of a Brownian bridge from (t0, x0) to (t1, x1) at time t.
double bridge_point(double t0, double x0, double t1, double x1, double t, RngStream& rng);

/// Minimum of the Brownian bridge from (t0, x0) to (t1, x1): value by the
/// reflection inverse CDF, location by the inverse-Gaussian representation of
/// the argmin given the minimum.
BridgeMinimum bridge_minimum(double t0, double x0, double t1, double x1, RngStream& rng);

/// Minimum of the bridge conditioned to stay above `floor`.
BridgeMinimum bridge_minimum_above(double t0, double x0, double t1, double x1, double floor, RngStream& rng);

/// Location of the bridge minimum given its value.
double bridge_argmin(double t0, double x0, double t1, double x1, double value, RngStream& rng);

/// Point of a three-dimensional Bessel bridge between heights y0, y1 >= 0.
/// This is the law of a Brownian bridge conditioned to stay above a floor,
/// with heights measured from that floor.
double bessel3_bridge_point(double t0, double y0, double t1, double y1, double t, RngStream& rng);

/// Probability that a Brownian bridge over a step of length h between x0 and
/// x1, both strictly on the same side of `level`, touches it.
double bridge_crossing_probability(double x0, double x1, double level, double h);

/// Inverse Gaussian IG(mu, lambda) (Michael, Schucany and Haas).
double sample_inverse_gaussian(double mu, double lambda, RngStream& rng);

}  // namespace snakemin
