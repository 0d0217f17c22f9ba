#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "snakemin/stats.hpp"

namespace snakemin {

/// Usage or configuration problem (exit code 2), as opposed to a failed check.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Knobs shared by every command. Unset optionals fall back to the default of
/// the individual check (the snake checks and the SDE checks use different
/// eps and dt).
struct RunConfig {
    std::uint64_t master_seed = 20240611;
    std::optional<std::uint64_t> n;
    std::optional<double> dt;
    std::optional<double> ds;
    std::optional<double> eps;
    std::optional<double> trunc_eps;
    double alpha_level = 0.01;
    std::string output_dir;
    std::string format = "csv";
    unsigned threads = 0;

    void validate() const;
    std::string to_json() const;
    /// Keys: seed, n, dt, ds, eps, trunc_eps, alpha, out, format, threads.
    /// Unknown keys are rejected.
    static RunConfig from_json(const std::string& text);
    /// Fields set in `flags` win over this one.
    void merge_from(const RunConfig& flags, const std::vector<std::string>& set_keys);
};

/// The twelve check names, in acceptance order.
const std::vector<std::string>& check_names();

/// Runs one named check, or all of them for "all". Raw samples go to
/// output_dir when it is set, together with the config and the reports.
std::vector<VerdictReport> run_check(const std::string& name, const RunConfig& cfg);

const std::vector<std::string>& dump_kinds();

/// Writes one of the data dumps into output_dir; returns the file paths.
std::vector<std::string> dump(const std::string& kind, const RunConfig& cfg);

/// P(T <= t) for the absorption time of R^(alpha) from r0. By the reversal
/// to the Bessel process of dimension 2 alpha + 3, T has the law of
/// r0^2 / (2 G) with G ~ Gamma(alpha + 1/2).
double bessel_absorption_cdf(double alpha, double r0, double t);

}  // namespace snakemin
