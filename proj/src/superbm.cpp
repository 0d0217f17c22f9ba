#include "snakemin/superbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "snakemin/sde.hpp"

namespace snakemin {

FiniteMeasure1D::FiniteMeasure1D(std::vector<Atom> atoms, std::optional<double> support_min) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw std::invalid_argument("FiniteMeasure1D: the measure must be nonzero");
    double lowest = std::numeric_limits<double>::infinity();
    for (const Atom& at : atoms_) {
        if (!std::isfinite(at.u)) throw std::invalid_argument("FiniteMeasure1D: atom locations must be finite");
        if (!(at.mass > 0.0) || !std::isfinite(at.mass)) throw std::invalid_argument("FiniteMeasure1D: masses must be positive and finite");
        total_ += at.mass;
        lowest = std::min(lowest, at.u);
    }
    m_ = lowest;
    if (support_min) {
        if (!std::isfinite(*support_min) || *support_min > lowest)
            throw std::invalid_argument("FiniteMeasure1D: support_min must be finite and not above the lowest atom");
        m_ = *support_min;
    }
}

FiniteMeasure1D FiniteMeasure1D::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("atoms") || !j["atoms"].is_array()) throw std::invalid_argument("FiniteMeasure1D: expected an \"atoms\" array");
    std::vector<Atom> atoms;
    for (const auto& a : j["atoms"]) atoms.push_back({a.at("u").get<double>(), a.at("mass").get<double>()});
    std::optional<double> m;
    if (j.contains("support_min")) m = j["support_min"].get<double>();
    return FiniteMeasure1D(std::move(atoms), m);
}

FiniteMeasure1D FiniteMeasure1D::from_quantiles(const std::function<double(double)>& quantile, double total_mass, std::size_t n) {
    if (n == 0 || !(total_mass > 0.0)) throw std::invalid_argument("FiniteMeasure1D::from_quantiles: bad arguments");
    std::vector<Atom> atoms;
    atoms.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        atoms.push_back({quantile((static_cast<double>(k) + 0.5) / static_cast<double>(n)), total_mass / static_cast<double>(n)});
    return FiniteMeasure1D(std::move(atoms), quantile(0.0));
}

bool FiniteMeasure1D::has_atom_at_m() const {
    return std::any_of(atoms_.begin(), atoms_.end(), [&](const Atom& a) { return a.u == m_; });
}

double FiniteMeasure1D::exponent(double x) const {
    double acc = 0.0;
    for (const Atom& a : atoms_) {
        const double d = a.u - x;
        acc += a.mass / (d * d);
    }
    return acc;
}

FiniteMeasure1D FiniteMeasure1D::shifted(double c) const {
    std::vector<Atom> atoms = atoms_;
    for (Atom& a : atoms) a.u += c;
    return FiniteMeasure1D(std::move(atoms), m_ + c);
}

FiniteMeasure1D FiniteMeasure1D::plus(const FiniteMeasure1D& other) const {
    std::vector<Atom> atoms = atoms_;
    atoms.insert(atoms.end(), other.atoms_.begin(), other.atoms_.end());
    return FiniteMeasure1D(std::move(atoms), std::min(m_, other.m_));
}

double cdf_mX(const FiniteMeasure1D& mu, double x) {
    if (!(x < mu.m())) throw std::invalid_argument("cdf_mX: x must lie below m");
    return std::exp(-1.5 * mu.exponent(x));
}

double atom_probability(const FiniteMeasure1D& mu) {
    if (mu.has_atom_at_m()) return 0.0;
    return std::exp(-1.5 * mu.exponent(mu.m()));
}

double sample_mX(const FiniteMeasure1D& mu, RngStream& rng) {
    const double u = rng.uniform();
    const double m = mu.m();
    if (u <= atom_probability(mu)) return m;
    // P(m_X >= x) decreases from 1 at -infinity to the atom at m.
    double width = 1.0;
    double lo = m - width;
    while (cdf_mX(mu, lo) < u) {
        width *= 2.0;
        lo = m - width;
        if (width > 1e300) throw std::runtime_error("sample_mX: bracket expansion failed");
    }
    double hi = m;
    while (hi - lo > 1e-12 * std::max(1.0, std::abs(lo))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (cdf_mX(mu, mid) >= u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double joint_density_wmin0(const FiniteMeasure1D& mu, double a, double y) {
    if (!(y < mu.m())) throw std::invalid_argument("joint_density_wmin0: y must lie below m");
    double restricted = 0.0;
    for (const Atom& at : mu.atoms()) {
        if (at.u > a) continue;
        const double d = at.u - y;
        restricted += at.mass / (d * d * d);
    }
    return 3.0 * restricted * std::exp(-1.5 * mu.exponent(y));
}

SuperMinSample sample_wmin_endpoints(const FiniteMeasure1D& mu, RngStream& rng) {
    SuperMinSample out;
    out.m_X = sample_mX(mu, rng);
    if (out.m_X >= mu.m()) {
        out.path = FinitePath::trivial(mu.m());
        return out;
    }
    const double x = out.m_X;
    double total = 0.0;
    for (const Atom& at : mu.atoms()) total += at.mass / std::pow(at.u - x, 3);
    double target = rng.uniform() * total;
    double w0 = mu.atoms().back().u;
    for (const Atom& at : mu.atoms()) {
        target -= at.mass / std::pow(at.u - x, 3);
        if (target <= 0.0) {
            w0 = at.u;
            break;
        }
    }
    out.w0 = w0;
    out.path = FinitePath({0.0}, {w0});
    return out;
}

void attach_wmin_path(SuperMinSample& sample, double dt, RngStream& rng) {
    if (!sample.w0) return;
    const double x = sample.m_X;
    const double r0 = *sample.w0 - x;
    // Unit-frame kernel and Brownian scaling: m_X has a heavy left tail and
    // the cost must not grow with w0 - m_X.
    const SamplePath r = simulate_bessel(BesselConfig::with_defaults(3.0, 1.0, dt), rng);
    if (r.stop != StopReason::absorbed) throw std::runtime_error("sample_wmin: horizon reached before absorption");
    std::vector<double> t(r.times.size());
    std::vector<double> v(r.values.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = r0 * r0 * r.times[i];
        v[i] = x + r0 * r.values[i];
    }
    v.front() = *sample.w0;
    v.back() = x;
    sample.path = FinitePath(std::move(t), std::move(v));
}

SuperMinSample sample_wmin(const FiniteMeasure1D& mu, double dt, RngStream& rng) {
    SuperMinSample out = sample_wmin_endpoints(mu, rng);
    attach_wmin_path(out, dt, rng);
    return out;
}

std::optional<double> poisson_min_construction(const FiniteMeasure1D& mu, double floor, RngStream& rng) {
    if (!(floor < mu.m())) throw std::invalid_argument("poisson_min_construction: the floor must lie below m");
    std::optional<double> best;
    for (const Atom& at : mu.atoms()) {
        const double gap = at.u - floor;
        const std::uint64_t k = rng.poisson(1.5 * at.mass / (gap * gap));
        // Given it lies below the floor, an excursion minimum y satisfies
        // P(Y <= y) = (u - floor)^2 / (u - y)^2.
        for (std::uint64_t i = 0; i < k; ++i) {
            const double y = at.u - gap / std::sqrt(rng.uniform());
            if (!best || y < *best) best = y;
        }
    }
    return best;
}

void write_super_csv(const std::vector<SuperMinSample>& samples, std::ostream& out) {
    out.precision(17);
    out << "m_X,w0,duration\r\n";
    for (const auto& s : samples) {
        out << s.m_X << ',';
        if (s.w0) out << *s.w0;
        out << ',' << s.duration() << "\r\n";
    }
}

}  // namespace snakemin
