#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "snakemin/paths.hpp"
#include "snakemin/rng.hpp"

namespace snakemin {

struct SnakeConfig {
    /// Height threshold: excursions are sampled under N_x( . | sup zeta > eps).
    double eps = 0.01;
    /// Floor on the s-grid step.
    double ds = 1e-6;
    /// Maximum lifetime spacing of checkpoints along one extension.
    double dt = 1e-2;
    /// Base s-grid size per excursion; taller excursions get a coarser step.
    std::size_t max_steps = 1000;
    /// After the coarse pass, steps whose values come within
    /// refine_width * (step length)^(1/4) of W_* are split again, down to
    /// ds_coarse / 2^refine_depth. Zero disables it.
    int refine_depth = 16;
    double refine_width = 3.0;
    /// Steps far above this level are never refined, which skips the work
    /// on excursions whose minimum is irrelevant to the caller.
    double focus_level = -std::numeric_limits<double>::infinity();
    /// When finite, steps before the first passage below this level that come
    /// within reach of it are refined too, which resolves S_b and W_{S_b}.
    double hit_level = -std::numeric_limits<double>::infinity();
    /// When finite, and while watch_floor <= W_* <= focus_level, steps whose
    /// minimum lies above this level but within reach of it are refined too,
    /// so that it is known which subtrees reach the level.
    double watch_level = -std::numeric_limits<double>::infinity();
    double watch_floor = -std::numeric_limits<double>::infinity();
    /// Draw the exact minimum of every extension segment.
    bool bridge_refine = true;
    /// Spatial starting point x of N_x.
    double start = 0.0;
    /// Node budget; refinement stops once it is used up.
    std::size_t max_nodes = std::size_t{1} << 22;

    void validate() const;
};

/// Checkpoint of the branching path system. The edge from `parent` to this
/// node is a Brownian bridge, conditioned to stay above `floor` when the
/// floor is finite. `owner` is the s-time at which the point first appears
/// as part of the snake.
struct PathNode {
    double t;
    double x;
    double floor;
    std::int64_t parent;
    double owner;
};

class PathTree {
public:
    std::vector<PathNode> nodes;

    /// Root-to-node path.
    FinitePath path_to(std::size_t id) const;
};

enum class Side { hat, check };

const char* to_string(Side side);

struct SubtreeRecord {
    Side side = Side::hat;
    double branch_level = 0.0;
    double attach_value = 0.0;
    double min_value = 0.0;
    double height = 0.0;
    double duration = 0.0;
};

/// One simulated snake excursion. Arrays are stored in simulation order;
/// the accessors apply the time reversal when `reversed()` is set.
class SnakeTrajectory {
public:
    std::size_t size() const { return sgrid_.size(); }
    std::size_t last() const { return sgrid_.size() - 1; }
    double sigma() const { return sgrid_.back(); }

    double s(std::size_t i) const;
    double zeta(std::size_t i) const;
    double tip(std::size_t i) const;
    /// Minimum of zeta over the step ending at grid point i (i >= 1).
    double zeta_min(std::size_t i) const;
    /// Minimum over the path values created or visited during step i.
    double step_min(std::size_t i) const;
    /// W_{s_i}, rebuilt from the checkpoint tree.
    FinitePath path_at(std::size_t i) const;

    std::vector<double> sgrid() const;
    std::vector<double> zetas() const;
    std::vector<double> tips() const;

    double wstar() const { return wstar_; }
    /// Grid index of the step that contains s_m.
    std::size_t sm_index() const;
    /// s-time attributed to s_m.
    double sm_time() const { return s(sm_index()); }
    const FinitePath& min_path() const { return min_path_; }
    /// Tree node at which W_* is attained; the end of min_path().
    std::uint32_t min_node() const { return min_node_; }
    double height() const { return height_; }
    double eps() const { return eps_; }
    double ds() const { return ds_; }
    double dt() const { return dt_; }
    bool reversed() const { return reversed_; }
    const PathTree& tree() const { return *tree_; }
    std::size_t refined_steps() const { return refined_steps_; }

    std::size_t forward_index(std::size_t i) const { return reversed_ ? last() - i : i; }

    friend class SnakeBuilder;
    friend SnakeTrajectory time_reverse(const SnakeTrajectory& traj);
    friend std::vector<SubtreeRecord> subtree_decomposition(const SnakeTrajectory& traj);
    friend std::optional<FinitePath> first_hit_path(const SnakeTrajectory& traj, double b);

private:
    // Per grid point (index 0 is the start of the excursion).
    std::vector<double> sgrid_;
    std::vector<double> zeta_;
    std::vector<double> tip_;
    std::vector<std::uint32_t> top_;
    // Per step ending at grid point i; entry 0 is unused.
    std::vector<double> zeta_min_;
    std::vector<double> step_min_;

    std::shared_ptr<PathTree> tree_;
    double wstar_ = 0.0;
    std::size_t sm_ = 0;
    std::uint32_t min_node_ = 0;
    FinitePath min_path_;
    double height_ = 0.0;
    double eps_ = 0.0;
    double ds_ = 0.0;
    double dt_ = 0.0;
    std::size_t refined_steps_ = 0;
    bool reversed_ = false;
};

/// One Brownian-snake excursion under N_x conditioned on sup zeta > eps.
SnakeTrajectory simulate_snake(const SnakeConfig& cfg, RngStream& rng);

struct MinimumInfo {
    double wstar;
    std::size_t sm_index;
    FinitePath min_path;
};

MinimumInfo extract_minimum(const SnakeTrajectory& traj);

/// W_{S_b}: the path at the first time the tip reaches -b, or nothing when
/// the excursion stays above -b. Forward orientation only.
std::optional<FinitePath> first_hit_path(const SnakeTrajectory& traj, double b);

/// Excursions of zeta above its running minimum after s_m (hat) and before
/// s_m (check), summarized as subtree records hanging off the minimizing path.
std::vector<SubtreeRecord> subtree_decomposition(const SnakeTrajectory& traj);

/// The excursion read backwards in s. Applying it twice gives back the
/// original trajectory.
SnakeTrajectory time_reverse(const SnakeTrajectory& traj);

/// CSV with columns s,zeta,tip.
void write_trajectory_csv(const SnakeTrajectory& traj, std::ostream& out);

}  // namespace snakemin
