#include "snakemin/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include "json.hpp"

namespace snakemin {

namespace {

void reject_nan(const std::vector<double>& v, const char* who) {
    for (double x : v)
        if (std::isnan(x)) throw std::invalid_argument(std::string(who) + ": NaN sample");
}

double chi_square_upper(double stat, double df) {
    if (!(df >= 1.0)) throw std::invalid_argument("chi-square: need at least two bins");
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), std::max(stat, 0.0)));
}

// Pearson statistic on observed vs expected frequencies over the cells
// 0, 1, ..., with the upper tail merged until each expected count is >= 5.
TestResult pooled_poisson_test(const std::vector<std::uint64_t>& counts, const std::function<double(std::uint64_t)>& pmf,
                               const std::function<double(std::uint64_t)>& upper_tail, double n) {
    std::vector<double> expected;
    std::vector<double> observed;
    const std::uint64_t kmax = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    std::vector<double> hist(kmax + 2, 0.0);
    for (auto k : counts) hist[k] += 1.0;
    // Lower cells one at a time while they carry >= 5 expected and the
    // remaining tail still does too.
    std::uint64_t k = 0;
    double low_exp = 0.0;
    double low_obs = 0.0;
    while (true) {
        low_exp += n * pmf(k);
        low_obs += k < hist.size() ? hist[k] : 0.0;
        const double tail = n * upper_tail(k + 1);
        if (low_exp >= 5.0 && tail >= 5.0) {
            expected.push_back(low_exp);
            observed.push_back(low_obs);
            low_exp = 0.0;
            low_obs = 0.0;
        } else if (tail < 5.0) {
            break;
        }
        ++k;
        if (k > 100000) throw std::runtime_error("chi-square: binning did not terminate");
    }
    double tail_obs = low_obs;
    for (std::size_t j = k + 1; j < hist.size(); ++j) tail_obs += hist[j];
    const double tail_exp = low_exp + n * upper_tail(k + 1);
    if (expected.empty()) throw std::invalid_argument("chi-square: too few samples for expected counts >= 5");
    if (tail_exp >= 5.0) {
        expected.push_back(tail_exp);
        observed.push_back(tail_obs);
    } else {
        expected.back() += tail_exp;
        observed.back() += tail_obs;
    }
    if (expected.size() < 2) throw std::invalid_argument("chi-square: fewer than two bins with expected count >= 5");
    double stat = 0.0;
    for (std::size_t j = 0; j < expected.size(); ++j) {
        const double d = observed[j] - expected[j];
        stat += d * d / expected[j];
    }
    return {stat, chi_square_upper(stat, static_cast<double>(expected.size() - 1))};
}

}  // namespace

double kolmogorov_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf) {
    reject_nan(samples, "ks_one_sample");
    if (samples.size() < 20) throw std::invalid_argument("ks_one_sample: need at least 20 samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double en = std::sqrt(n);
    return {d, kolmogorov_tail((en + 0.12 + 0.11 / en) * d)};
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    reject_nan(a, "ks_two_sample");
    reject_nan(b, "ks_two_sample");
    if (a.size() < 20 || b.size() < 20) throw std::invalid_argument("ks_two_sample: need at least 20 samples per side");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double en = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_tail((en + 0.12 + 0.11 / en) * d)};
}

TestResult chi_square_poisson(const std::vector<std::uint64_t>& counts, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("chi_square_poisson: lambda must be positive");
    const boost::math::poisson dist(lambda);
    return pooled_poisson_test(
        counts, [&](std::uint64_t k) { return boost::math::pdf(dist, static_cast<double>(k)); },
        [&](std::uint64_t k) {
            return k == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, static_cast<double>(k - 1)));
        },
        static_cast<double>(counts.size()));
}

TestResult chi_square_poisson_mixture(const std::vector<std::uint64_t>& counts, const std::vector<double>& lambdas) {
    if (counts.size() != lambdas.size()) throw std::invalid_argument("chi_square_poisson_mixture: size mismatch");
    if (counts.empty()) throw std::invalid_argument("chi_square_poisson_mixture: no samples");
    for (double l : lambdas)
        if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("chi_square_poisson_mixture: bad lambda");
    const double n = static_cast<double>(counts.size());
    auto pmf = [&](std::uint64_t k) {
        double acc = 0.0;
        for (double l : lambdas) {
            if (l == 0.0) {
                acc += k == 0 ? 1.0 : 0.0;
                continue;
            }
            acc += boost::math::pdf(boost::math::poisson(l), static_cast<double>(k));
        }
        return acc / n;
    };
    auto tail = [&](std::uint64_t k) {
        if (k == 0) return 1.0;
        double acc = 0.0;
        for (double l : lambdas) {
            if (l == 0.0) continue;
            acc += boost::math::cdf(boost::math::complement(boost::math::poisson(l), static_cast<double>(k - 1)));
        }
        return acc / n;
    };
    return pooled_poisson_test(counts, pmf, tail, n);
}

TestResult chi_square_independence(const std::vector<std::vector<double>>& table) {
    const std::size_t rows = table.size();
    if (rows < 2) throw std::invalid_argument("chi_square_independence: need at least two rows");
    const std::size_t cols = table.front().size();
    if (cols < 2) throw std::invalid_argument("chi_square_independence: need at least two columns");
    std::vector<double> rsum(rows, 0.0);
    std::vector<double> csum(cols, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        if (table[i].size() != cols) throw std::invalid_argument("chi_square_independence: ragged table");
        for (std::size_t j = 0; j < cols; ++j) {
            rsum[i] += table[i][j];
            csum[j] += table[i][j];
            total += table[i][j];
        }
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double e = rsum[i] * csum[j] / total;
            if (!(e >= 5.0)) throw std::invalid_argument("chi_square_independence: expected cell count below 5");
            const double d = table[i][j] - e;
            stat += d * d / e;
        }
    }
    return {stat, chi_square_upper(stat, static_cast<double>((rows - 1) * (cols - 1)))};
}

MeanCI mc_mean_ci(const std::vector<double>& samples, double level) {
    reject_nan(samples, "mc_mean_ci");
    if (samples.size() < 2) throw std::invalid_argument("mc_mean_ci: need at least two samples");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("mc_mean_ci: level must lie in (0, 1)");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / (n - 1.0) / n);
    const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
    return {mean, z * se, se};
}

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("pearson_correlation: need paired samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson_correlation: constant input");
    return sxy / std::sqrt(sxx * syy);
}

double ks_critical_distance(double n_eff, double alpha) {
    if (!(n_eff > 0.0) || !(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ks_critical_distance: bad arguments");
    // Invert the Kolmogorov tail by bisection.
    double lo = 0.2;
    double hi = 5.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (kolmogorov_tail(mid) > alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi) / std::sqrt(n_eff);
}

double poisson_pit(std::uint64_t k, double lambda, double u) {
    if (!(lambda > 0.0)) return u;
    const boost::math::poisson dist(lambda);
    const double below = k == 0 ? 0.0 : boost::math::cdf(dist, static_cast<double>(k - 1));
    return below + u * boost::math::pdf(dist, static_cast<double>(k));
}

std::string VerdictReport::to_json() const {
    nlohmann::json j;
    j["check_id"] = check_id;
    j["statistic"] = statistic;
    j["threshold"] = threshold;
    j["p_value"] = p_value ? nlohmann::json(*p_value) : nlohmann::json(nullptr);
    j["n"] = n;
    j["master_seed"] = master_seed;
    j["runtime_seconds"] = runtime_seconds;
    j["pass"] = pass;
    j["notes"] = notes;
    return j.dump();
}

}  // namespace snakemin
