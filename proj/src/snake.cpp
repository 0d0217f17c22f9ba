#include "snakemin/snake.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "snakemin/sde.hpp"

namespace snakemin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// How zeta behaves inside a step, given what has been sampled so far.
enum class StepKind : std::uint8_t {
    general,    // minimum `low` attained at `argmin` strictly inside
    min_start,  // minimum at the left endpoint
    min_end,    // minimum at the right endpoint
};

struct GridPoint {
    double s;
    double z;
    std::uint32_t top;
};

struct StepInfo {
    StepKind kind;
    double low;
    double argmin;
    double region_min;
};

}  // namespace

void SnakeConfig::validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("SnakeConfig: eps must be positive");
    if (!(ds > 0.0)) throw std::invalid_argument("SnakeConfig: ds must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("SnakeConfig: dt must be positive");
    if (refine_depth < 0 || refine_depth > 40) throw std::invalid_argument("SnakeConfig: refine_depth out of range");
    if (!(refine_width >= 0.0)) throw std::invalid_argument("SnakeConfig: refine_width must be nonnegative");
    if (std::isnan(focus_level) || std::isnan(hit_level) || std::isnan(watch_level) || std::isnan(watch_floor)) throw std::invalid_argument("SnakeConfig: NaN level");
    if (!std::isfinite(start)) throw std::invalid_argument("SnakeConfig: start must be finite");
    if (max_nodes < 16) throw std::invalid_argument("SnakeConfig: max_nodes too small");
}

FinitePath PathTree::path_to(std::size_t id) const {
    std::vector<double> t;
    std::vector<double> x;
    for (auto cur = static_cast<std::int64_t>(id); cur >= 0; cur = nodes[static_cast<std::size_t>(cur)].parent) {
        t.push_back(nodes[static_cast<std::size_t>(cur)].t);
        x.push_back(nodes[static_cast<std::size_t>(cur)].x);
    }
    std::reverse(t.begin(), t.end());
    std::reverse(x.begin(), x.end());
    return FinitePath(std::move(t), std::move(x));
}

const char* to_string(Side side) { return side == Side::hat ? "hat" : "check"; }

class SnakeBuilder {
public:
    SnakeBuilder(const SnakeConfig& cfg, RngStream& rng) : cfg_(cfg), rng_(rng), tree_(std::make_shared<PathTree>()) {}

    SnakeTrajectory run() {
        const LifetimeExcursion exc = sample_ito_excursion(cfg_.eps, cfg_.ds, rng_, cfg_.max_steps);
        const std::size_t n = exc.size();
        const double ds_coarse = n > 1 ? exc.sgrid[1] - exc.sgrid[0] : cfg_.ds;
        // Checkpoints finer than the typical lifetime move of one step carry
        // no information: every edge is an exact bridge.
        dt_ = std::max(cfg_.dt, std::sqrt(ds_coarse));
        tree_->nodes.reserve(4 * n);
        wstar_ = kInf;
        add_node(0.0, cfg_.start, -kInf, -1, 0.0);

        std::vector<GridPoint> points;
        std::vector<StepInfo> steps;
        points.reserve(n);
        steps.reserve(n);
        points.push_back({0.0, 0.0, 0});
        steps.push_back({StepKind::min_start, 0.0, 0.0, cfg_.start});

        // Coarse pass on the excursion grid.
        for (std::size_t i = 1; i < n; ++i) {
            const double s0 = exc.sgrid[i - 1];
            const double s1 = exc.sgrid[i];
            const double z0 = i == 1 ? 0.0 : exc.zeta[i - 1];
            const double z1 = i + 1 == n ? 0.0 : exc.zeta[i];
            StepInfo step{};
            if (z0 <= 0.0) {
                step = {StepKind::min_start, 0.0, s0, 0.0};
            } else if (z1 <= 0.0) {
                step = {StepKind::min_end, 0.0, s1, 0.0};
            } else {
                const BridgeMinimum bm = bridge_minimum_above(s0, z0, s1, z1, 0.0, rng_);
                step = {StepKind::general, bm.value, bm.time, 0.0};
                if (!(bm.time > s0 && bm.time < s1)) step.kind = bm.time <= s0 ? StepKind::min_start : StepKind::min_end;
            }
            double region = kInf;
            const std::uint32_t branch = locate(points.back().top, step.low, &region);
            const std::uint32_t top = extend(branch, z1, s1, &region);
            step.region_min = region;
            points.push_back({s1, z1, top});
            steps.push_back(step);
            if (tree_->nodes.size() > cfg_.max_nodes)
                throw std::length_error("simulate_snake: node budget exceeded; raise max_nodes or lower max_steps");
        }
        // Targeted refinement around the global minimum, most promising steps first.
        std::map<std::size_t, std::pair<std::vector<GridPoint>, std::vector<StepInfo>>> refined;
        if (cfg_.refine_depth > 0) {
            min_len_ = ds_coarse * std::ldexp(1.0, -cfg_.refine_depth);
            std::vector<std::size_t> order(points.size() - 1);
            std::iota(order.begin(), order.end(), std::size_t{1});
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return steps[a].region_min < steps[b].region_min; });
            for (std::size_t i : order) {
                if (!wants_refinement(points[i - 1], points[i], steps[i])) continue;
                auto& out = refined[i];
                split(points[i - 1], points[i], steps[i], out.first, out.second);
            }
        }

        SnakeTrajectory traj;
        traj.sgrid_.reserve(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto it = refined.find(i);
            if (it != refined.end()) {
                const auto& [pts, sts] = it->second;
                for (std::size_t k = 0; k < pts.size(); ++k) push(traj, pts[k], sts[k]);
            } else {
                push(traj, points[i], steps[i]);
            }
        }
        traj.zeta_min_[0] = 0.0;
        traj.step_min_[0] = cfg_.start;
        traj.tree_ = tree_;
        traj.wstar_ = wstar_;
        traj.min_node_ = min_node_;
        traj.min_path_ = tree_->path_to(min_node_);
        const double owner = tree_->nodes[min_node_].owner;
        traj.sm_ = static_cast<std::size_t>(std::lower_bound(traj.sgrid_.begin(), traj.sgrid_.end(), owner) -
                                            traj.sgrid_.begin());
        traj.height_ = exc.height;
        traj.eps_ = cfg_.eps;
        traj.ds_ = ds_coarse;
        traj.dt_ = dt_;
        traj.refined_steps_ = refined_count_;
        traj.tip_.resize(traj.top_.size());
        for (std::size_t i = 0; i < traj.top_.size(); ++i) traj.tip_[i] = tree_->nodes[traj.top_[i]].x;
        return traj;
    }

private:
    static void push(SnakeTrajectory& traj, const GridPoint& p, const StepInfo& st) {
        traj.sgrid_.push_back(p.s);
        traj.zeta_.push_back(p.z);
        traj.top_.push_back(p.top);
        traj.zeta_min_.push_back(st.low);
        traj.step_min_.push_back(st.region_min);
    }

    std::uint32_t add_node(double t, double x, double floor, std::int64_t parent, double owner) {
        const auto id = static_cast<std::uint32_t>(tree_->nodes.size());
        tree_->nodes.push_back({t, x, floor, parent, owner});
        if (x < wstar_ || (x == wstar_ && owner < tree_->nodes[min_node_].owner)) {
            wstar_ = x;
            min_node_ = id;
        }
        if (x <= cfg_.hit_level) first_hit_ = std::min(first_hit_, owner);
        return id;
    }

    // Node at lifetime t on the path ending at `top`, splitting an edge when
    // needed. Folds the values of the nodes at or above t into *region.
    std::uint32_t locate(std::uint32_t top, double t, double* region) {
        auto& nodes = tree_->nodes;
        std::int64_t id = top;
        std::int64_t child = -1;
        while (nodes[static_cast<std::size_t>(id)].t > t) {
            *region = std::min(*region, nodes[static_cast<std::size_t>(id)].x);
            child = id;
            id = nodes[static_cast<std::size_t>(id)].parent;
        }
        const PathNode p = nodes[static_cast<std::size_t>(id)];
        if (p.t == t || child < 0) {
            *region = std::min(*region, p.x);
            return static_cast<std::uint32_t>(id);
        }
        const PathNode c = nodes[static_cast<std::size_t>(child)];
        double x;
        if (std::isfinite(c.floor)) {
            x = c.floor + bessel3_bridge_point(p.t, std::max(0.0, p.x - c.floor), c.t, std::max(0.0, c.x - c.floor), t, rng_);
        } else {
            x = bridge_point(p.t, p.x, c.t, c.x, t, rng_);
        }
        const std::uint32_t mid = add_node(t, x, c.floor, id, c.owner);
        tree_->nodes[static_cast<std::size_t>(child)].parent = mid;
        *region = std::min(*region, x);
        return mid;
    }

    // Fresh Brownian extension from `from` up to lifetime z.
    std::uint32_t extend(std::uint32_t from, double z, double owner, double* region) {
        const double t0 = tree_->nodes[from].t;
        const double span = z - t0;
        if (!(span > 1e-15 * std::max(1.0, z))) return from;
        const auto pieces = static_cast<std::size_t>(std::ceil(span / dt_));
        std::uint32_t prev = from;
        double ta = t0;
        double xa = tree_->nodes[from].x;
        for (std::size_t k = 0; k < pieces; ++k) {
            const double tb = k + 1 == pieces ? z : t0 + span * static_cast<double>(k + 1) / static_cast<double>(pieces);
            const double xb = xa + std::sqrt(tb - ta) * rng_.normal();
            if (cfg_.bridge_refine) {
                const BridgeMinimum bm = bridge_minimum(ta, xa, tb, xb, rng_);
                if (bm.time > ta && bm.time < tb) {
                    prev = add_node(bm.time, bm.value, bm.value, prev, owner);
                    *region = std::min(*region, bm.value);
                }
                prev = add_node(tb, xb, bm.value, prev, owner);
            } else {
                prev = add_node(tb, xb, -kInf, prev, owner);
            }
            *region = std::min(*region, xb);
            ta = tb;
            xa = xb;
        }
        return prev;
    }

    double walk_min(std::uint32_t top, double t) const {
        const auto& nodes = tree_->nodes;
        double out = kInf;
        for (std::int64_t id = top; id >= 0 && nodes[static_cast<std::size_t>(id)].t >= t;
             id = nodes[static_cast<std::size_t>(id)].parent)
            out = std::min(out, nodes[static_cast<std::size_t>(id)].x);
        return out;
    }

    double region_of(const GridPoint& a, const GridPoint& b, double low) const {
        return std::min(walk_min(a.top, low), walk_min(b.top, low));
    }

    bool wants_refinement(const GridPoint& a, const GridPoint& b, const StepInfo& st) const {
        const double len = b.s - a.s;
        if (!(len > min_len_)) return false;
        if (tree_->nodes.size() + 64 > cfg_.max_nodes) return false;
        const double reach = cfg_.refine_width * std::sqrt(std::sqrt(len));
        if (st.region_min - wstar_ < reach && st.region_min - cfg_.focus_level < reach) return true;
        if (a.s < first_hit_ && st.region_min - cfg_.hit_level < reach) return true;
        // A region already below the watch level has been seen to reach it.
        const double above = st.region_min - cfg_.watch_level;
        if (wstar_ <= cfg_.focus_level && wstar_ >= cfg_.watch_floor && above > 0.0 && above < reach) return true;
        return false;
    }

    // Conditional refinement of one step, given the paths at both ends and
    // the sampled behaviour of zeta inside. Emits the new grid points in
    // order, ending with b.
    void split(const GridPoint& a, const GridPoint& b, const StepInfo& st, std::vector<GridPoint>& pts,
               std::vector<StepInfo>& sts) {
        if (!wants_refinement(a, b, st)) {
            pts.push_back(b);
            sts.push_back(st);
            return;
        }
        ++refined_count_;
        double scratch = kInf;
        if (st.kind == StepKind::general) {
            // Insert the point where zeta attains its minimum: the branch point.
            const std::uint32_t node = locate(a.top, st.low, &scratch);
            const GridPoint m{st.argmin, st.low, node};
            StepInfo left{StepKind::min_end, st.low, st.argmin, 0.0};
            StepInfo right{StepKind::min_start, st.low, st.argmin, 0.0};
            left.region_min = region_of(a, m, st.low);
            right.region_min = region_of(m, b, st.low);
            split(a, m, left, pts, sts);
            split(m, b, right, pts, sts);
            return;
        }
        const double mid = 0.5 * (a.s + b.s);
        if (!(mid > a.s && mid < b.s)) {
            pts.push_back(b);
            sts.push_back(st);
            return;
        }
        if (st.kind == StepKind::min_end) {
            // zeta = z_b + Bessel(3) bridge from z_a - z_b down to 0.
            const double z = b.z + bessel3_bridge_point(a.s, a.z - b.z, b.s, 0.0, mid, rng_);
            const BridgeMinimum bm = bridge_minimum_above(a.s, a.z, mid, z, b.z, rng_);
            const std::uint32_t branch = locate(a.top, bm.value, &scratch);
            const std::uint32_t top = extend(branch, z, mid, &scratch);
            const GridPoint m{mid, z, top};
            StepInfo left{StepKind::general, bm.value, bm.time, 0.0};
            if (!(bm.time > a.s && bm.time < mid)) left.kind = bm.time <= a.s ? StepKind::min_start : StepKind::min_end;
            StepInfo right{StepKind::min_end, b.z, b.s, 0.0};
            left.region_min = region_of(a, m, left.low);
            right.region_min = region_of(m, b, right.low);
            split(a, m, left, pts, sts);
            split(m, b, right, pts, sts);
        } else {
            const double z = a.z + bessel3_bridge_point(a.s, 0.0, b.s, b.z - a.z, mid, rng_);
            const BridgeMinimum bm = bridge_minimum_above(mid, z, b.s, b.z, a.z, rng_);
            const std::uint32_t branch = locate(b.top, bm.value, &scratch);
            const std::uint32_t top = extend(branch, z, mid, &scratch);
            const GridPoint m{mid, z, top};
            StepInfo left{StepKind::min_start, a.z, a.s, 0.0};
            StepInfo right{StepKind::general, bm.value, bm.time, 0.0};
            if (!(bm.time > mid && bm.time < b.s)) right.kind = bm.time <= mid ? StepKind::min_start : StepKind::min_end;
            left.region_min = region_of(a, m, left.low);
            right.region_min = region_of(m, b, right.low);
            split(a, m, left, pts, sts);
            split(m, b, right, pts, sts);
        }
    }

    const SnakeConfig& cfg_;
    RngStream& rng_;
    std::shared_ptr<PathTree> tree_;
    double wstar_ = kInf;
    std::uint32_t min_node_ = 0;
    double min_len_ = 0.0;
    double dt_ = 0.0;
    double first_hit_ = kInf;
    std::size_t refined_count_ = 0;
};

SnakeTrajectory simulate_snake(const SnakeConfig& cfg, RngStream& rng) {
    cfg.validate();
    SnakeBuilder builder(cfg, rng);
    return builder.run();
}

double SnakeTrajectory::s(std::size_t i) const { return reversed_ ? sigma() - sgrid_[last() - i] : sgrid_[i]; }
double SnakeTrajectory::zeta(std::size_t i) const { return zeta_[forward_index(i)]; }
double SnakeTrajectory::tip(std::size_t i) const { return tip_[forward_index(i)]; }

double SnakeTrajectory::zeta_min(std::size_t i) const {
    if (i == 0 || i > last()) throw std::out_of_range("zeta_min: step index out of range");
    return zeta_min_[reversed_ ? last() - i + 1 : i];
}

double SnakeTrajectory::step_min(std::size_t i) const {
    if (i == 0 || i > last()) throw std::out_of_range("step_min: step index out of range");
    return step_min_[reversed_ ? last() - i + 1 : i];
}

FinitePath SnakeTrajectory::path_at(std::size_t i) const { return tree_->path_to(top_[forward_index(i)]); }

std::vector<double> SnakeTrajectory::sgrid() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = s(i);
    return out;
}

std::vector<double> SnakeTrajectory::zetas() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = zeta(i);
    return out;
}

std::vector<double> SnakeTrajectory::tips() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = tip(i);
    return out;
}

std::size_t SnakeTrajectory::sm_index() const { return reversed_ ? last() - sm_ : sm_; }

MinimumInfo extract_minimum(const SnakeTrajectory& traj) {
    return {traj.wstar(), traj.sm_index(), traj.min_path()};
}

std::optional<FinitePath> first_hit_path(const SnakeTrajectory& traj, double b) {
    if (!(b > 0.0)) throw std::invalid_argument("first_hit_path: b must be positive");
    if (traj.reversed()) throw std::logic_error("first_hit_path: needs the forward orientation");
    const double level = -b;
    if (traj.wstar() > level) return std::nullopt;
    // Earliest owner among nodes at or below the level, then the lowest
    // lifetime along that extension.
    const auto& nodes = traj.tree().nodes;
    std::size_t best = nodes.size();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (nodes[k].x > level) continue;
        if (best == nodes.size() || nodes[k].owner < nodes[best].owner ||
            (nodes[k].owner == nodes[best].owner && nodes[k].t < nodes[best].t))
            best = k;
    }
    const FinitePath full = traj.tree().path_to(best);
    const double hit = full.first_hitting_time_below(level);
    std::vector<double> t;
    std::vector<double> x;
    for (std::size_t k = 0; k < full.size() && full.times[k] < hit; ++k) {
        t.push_back(full.times[k]);
        x.push_back(full.values[k]);
    }
    t.push_back(hit);
    x.push_back(level);
    if (t.size() >= 2 && !(t[t.size() - 1] > t[t.size() - 2])) {
        t.erase(t.end() - 2);
        x.erase(x.end() - 2);
    }
    return FinitePath(std::move(t), std::move(x));
}

std::vector<SubtreeRecord> subtree_decomposition(const SnakeTrajectory& traj) {
    if (traj.reversed()) {
        std::vector<SubtreeRecord> out = subtree_decomposition(time_reverse(traj));
        for (auto& r : out) r.side = r.side == Side::hat ? Side::check : Side::hat;
        return out;
    }
    const std::size_t last = traj.last();
    const std::size_t sm = traj.sm_;
    const auto& nodes = traj.tree_->nodes;
    const FinitePath& spine = traj.min_path_;
    const double tstar = spine.lifetime();

    std::vector<SubtreeRecord> records;
    std::vector<std::int64_t> record_of(last + 1, -1);
    auto open = [&](Side side, double level) {
        SubtreeRecord r;
        r.side = side;
        r.branch_level = level;
        r.attach_value = spine.value_at(level);
        r.min_value = r.attach_value;
        records.push_back(r);
    };
    auto absorb = [&](std::size_t j) {
        SubtreeRecord& r = records.back();
        record_of[j] = static_cast<std::int64_t>(records.size() - 1);
        r.height = std::max(r.height, traj.zeta_[j] - r.branch_level);
        r.duration += traj.sgrid_[j] - traj.sgrid_[j - 1];
        if (traj.zeta_[j] > r.branch_level) r.min_value = std::min(r.min_value, traj.tip_[j]);
    };

    // After s_m: excursions of zeta above its running minimum.
    double running = tstar;
    bool have = false;
    for (std::size_t j = sm + 1; j <= last; ++j) {
        const double low = traj.zeta_min_[j];
        if (low < running) {
            running = low;
            open(Side::hat, low);
            have = true;
        } else if (!have) {
            open(Side::hat, running);
            have = true;
        }
        absorb(j);
    }
    // Before s_m, read backwards: excursions above the future minimum.
    if (sm >= 1) {
        double future = traj.zeta_min_[sm];
        have = false;
        for (std::size_t j = sm - 1; j >= 1; --j) {
            if (!have || future < records.back().branch_level) {
                open(Side::check, future);
                have = true;
            }
            absorb(j);
            future = std::min(future, traj.zeta_min_[j]);
        }
    }

    // Each tree point belongs to the step where it first appears.
    for (const PathNode& nd : nodes) {
        const auto it = std::lower_bound(traj.sgrid_.begin(), traj.sgrid_.end(), nd.owner);
        const auto j = static_cast<std::size_t>(it - traj.sgrid_.begin());
        if (j > last || record_of[j] < 0) continue;
        SubtreeRecord& r = records[static_cast<std::size_t>(record_of[j])];
        if (nd.t > r.branch_level) r.min_value = std::min(r.min_value, nd.x);
    }
    return records;
}

SnakeTrajectory time_reverse(const SnakeTrajectory& traj) {
    SnakeTrajectory out = traj;
    out.reversed_ = !traj.reversed_;
    return out;
}

void write_trajectory_csv(const SnakeTrajectory& traj, std::ostream& out) {
    out.precision(17);
    out << "s,zeta,tip\r\n";
    for (std::size_t i = 0; i < traj.size(); ++i) out << traj.s(i) << ',' << traj.zeta(i) << ',' << traj.tip(i) << "\r\n";
}

}  // namespace snakemin
