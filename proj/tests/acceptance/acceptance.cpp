// Runs the twelve acceptance checks at their pinned default sizes and seed,
// one PASS/FAIL line per check. Exit code 1 when any check fails.
#include <cstdlib>
#include <iostream>
#include <string>

#include "snakemin/checks.hpp"

int main(int argc, char** argv) {
    snakemin::RunConfig cfg;
    if (const char* out = std::getenv("SNAKEMIN_ACCEPTANCE_OUT")) cfg.output_dir = out;
    // Optional subset: acceptance name1 name2 ...
    std::vector<std::string> names;
    for (int i = 1; i < argc; ++i) names.emplace_back(argv[i]);
    if (names.empty()) names = snakemin::check_names();
    int failures = 0;
    for (std::size_t k = 0; k < names.size(); ++k) {
        std::string line;
        try {
            const auto reports = snakemin::run_check(names[k], cfg);
            const auto& r = reports.front();
            line = std::string(r.pass ? "PASS " : "FAIL ") + std::to_string(k + 1) + " " + r.check_id + " statistic=" +
                   std::to_string(r.statistic) + " threshold=" + std::to_string(r.threshold) +
                   (r.p_value ? " p=" + std::to_string(*r.p_value) : std::string()) + " n=" + std::to_string(r.n) +
                   " time=" + std::to_string(r.runtime_seconds) + "s | " + r.notes;
            failures += r.pass ? 0 : 1;
        } catch (const std::exception& e) {
            line = "FAIL " + std::to_string(k + 1) + " " + names[k] + " error: " + e.what();
            ++failures;
        }
        std::cout << line << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
