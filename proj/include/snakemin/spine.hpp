#pragma once

#include <iosfwd>
#include <vector>

#include "snakemin/paths.hpp"
#include "snakemin/rng.hpp"
#include "snakemin/snake.hpp"

namespace snakemin {

struct SpineSample {
    double a = 0.0;
    FinitePath min_path;
    std::vector<SubtreeRecord> hat_records;
    std::vector<SubtreeRecord> check_records;
    double truncation_eps = 0.0;
    /// Branch proposals per side before thinning.
    std::size_t hat_proposals = 0;
    std::size_t check_proposals = 0;
};

/// a = a0 / sqrt(U): the law of -W_* under N_0( . | W_* <= -a0).
double sample_wstar_conditioned(double a0, RngStream& rng);

/// (R^(3)_t - a) from a until absorption. The kernel runs from 1 with step
/// dt and the path is mapped back by Brownian scaling, so the cost does not
/// grow with a. Throws if the horizon is reached before absorption.
FinitePath sample_minimizing_path(double a, double dt, RngStream& rng);

struct SubtreeSamplerConfig {
    double trunc_eps = 5e-4;
    /// Grid for the subtree excursions; eps, start and the refinement
    /// levels are set per proposal.
    SnakeConfig snake;
    /// Depth c of the band (-a, -a + c] that the caller cares about; the
    /// subtree snakes are refined around -a + c. Zero means around -a.
    double band = 0.0;
};

/// Poisson subtrees along the spine on both sides. Branch points arrive at
/// rate 1/trunc_eps per unit of lifetime per side, each carrying a snake
/// excursion from min_path(t) conditioned on height > trunc_eps; proposals
/// whose minimum reaches -a are dropped (thinning by the indicator
/// omega_* > -a).
SpineSample sample_spine_subtrees(const FinitePath& min_path, double a, const SubtreeSamplerConfig& cfg, RngStream& rng);

/// Expected number of subtrees per side with minimum in (-a, -a + c] whose
/// attach value is at least -a + c + gap:
///   2 int_{w(t) >= -a+c+gap} [3/(2(w+a-c)^2) - 3/(2(w+a)^2)] dt.
/// The integral is exact for the piecewise-linear path. gap = 0 diverges
/// when the path crosses -a + c, so gap must be positive in that case.
double deep_subtree_intensity(const FinitePath& min_path, double a, double c, double gap);

/// Records with min_value <= -a + c and attach_value >= -a + c + gap.
std::size_t count_deep(const std::vector<SubtreeRecord>& records, double a, double c, double gap);

/// min(-a, min over records of min_value); equals -a for a valid sample.
double reconstruct_wstar(const SpineSample& sample);

void write_spine_json(const SpineSample& sample, std::ostream& out);

}  // namespace snakemin
