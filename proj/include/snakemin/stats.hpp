#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace snakemin {

struct TestResult {
    double statistic;
    double p_value;
};

/// Asymptotic Kolmogorov tail P(K > lambda).
double kolmogorov_tail(double lambda);

/// One-sample KS test. Sorts a copy; rejects n < 20 and NaN samples.
TestResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Two-sample KS test with the (en + 0.12 + 0.11/en) small-sample correction.
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Chi-square goodness of fit of integer counts to Poisson(lambda). Tail
/// bins are merged until every expected count is at least 5.
TestResult chi_square_poisson(const std::vector<std::uint64_t>& counts, double lambda);

/// Same test when count i is Poisson(lambdas[i]): the expected frequencies
/// are the mixture sum of the individual Poisson masses.
TestResult chi_square_poisson_mixture(const std::vector<std::uint64_t>& counts, const std::vector<double>& lambdas);

/// Pearson chi-square test of independence on a contingency table. Throws
/// when an expected cell count is below 5.
TestResult chi_square_independence(const std::vector<std::vector<double>>& table);

struct MeanCI {
    double mean;
    double half_width;
    double std_error;
};

/// Normal-approximation confidence interval for the mean.
MeanCI mc_mean_ci(const std::vector<double>& samples, double level);

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

/// Critical KS distance at significance alpha for effective size n.
double ks_critical_distance(double n_eff, double alpha);

/// Randomized probability integral transform of k under Poisson(lambda):
/// uniform on (0, 1) when k ~ Poisson(lambda).
double poisson_pit(std::uint64_t k, double lambda, double u);

struct VerdictReport {
    std::string check_id;
    double statistic = 0.0;
    double threshold = 0.0;
    std::optional<double> p_value;
    std::uint64_t n = 0;
    std::uint64_t master_seed = 0;
    double runtime_seconds = 0.0;
    bool pass = false;
    std::string notes;

    /// One JSON object on a single line.
    std::string to_json() const;
};

}  // namespace snakemin
