#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "snakemin/checks.hpp"

namespace {

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
}

const char* kDumpSchemas =
    "Dump schemas (CSV files are RFC 4180 with a header row):\n"
    "  snake-trajectory  snake_trajectory.csv: replicate,s,zeta,tip\n"
    "  spine-sample      spine_sample_<i>.json: {a, truncation_eps, min_path: {times, values},\n"
    "                    hat_proposals, check_proposals, hat_records, check_records}; each record\n"
    "                    has side, branch_level, attach_value, min_value, height, duration\n"
    "  super-samples     super_samples.csv: m_X,w0,duration (mu = unit atom at 1)\n"
    "  bessel-paths      bessel_paths.csv: replicate,t,value (R^(3) from 1)\n"
    "Every command also writes run_config.json next to its output.";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Brownian snake minimum: verification checks and data dumps"};
    app.require_subcommand(1);
    app.footer(kDumpSchemas);

    snakemin::RunConfig flags;
    std::string config_path;
    std::uint64_t n = 0;
    double dt = 0, ds = 0, eps = 0, trunc_eps = 0;
    std::vector<CLI::Option*> opts;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file; flags override its values");
        opts.push_back(sub->add_option("--seed", flags.master_seed, "master seed"));
        opts.push_back(sub->add_option("--n", n, "replicates (the check's primary sample size)"));
        opts.push_back(sub->add_option("--dt", dt, "time step"));
        opts.push_back(sub->add_option("--ds", ds, "snake s-grid floor"));
        opts.push_back(sub->add_option("--eps", eps, "snake height threshold"));
        opts.push_back(sub->add_option("--trunc-eps", trunc_eps, "spine subtree height truncation"));
        opts.push_back(sub->add_option("--alpha", flags.alpha_level, "significance level"));
        opts.push_back(sub->add_option("--out", flags.output_dir, "output directory"));
        opts.push_back(sub->add_option("--format", flags.format, "raw sample format")->check(CLI::IsMember({"csv", "json"})));
        opts.push_back(sub->add_option("--threads", flags.threads, "worker threads (0: all cores)"));
    };

    std::string check_name;
    auto* run = app.add_subcommand("run-check", "run an acceptance check");
    run->add_option("name", check_name, "check name or 'all'")->required();
    add_common(run);
    std::string kind;
    auto* dmp = app.add_subcommand("dump", "write raw simulation output");
    dmp->add_option("kind", kind, "snake-trajectory | spine-sample | super-samples | bessel-paths")->required();
    add_common(dmp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        snakemin::RunConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw snakemin::ConfigError("cannot read config file " + config_path);
            std::stringstream buf;
            buf << in.rdbuf();
            cfg = snakemin::RunConfig::from_json(buf.str());
        }
        std::vector<std::string> set;
        for (auto* o : opts) {
            if (o->count() == 0) continue;
            std::string key = o->get_name();
            key = key.substr(key.find_first_not_of('-'));
            if (key == "trunc-eps") key = "trunc_eps";
            set.push_back(key);
        }
        // Option values land in plain variables first so that an unset flag
        // stays distinguishable from an explicit value.
        for (const auto& k : set) {
            if (k == "n") flags.n = n;
            if (k == "dt") flags.dt = dt;
            if (k == "ds") flags.ds = ds;
            if (k == "eps") flags.eps = eps;
            if (k == "trunc_eps") flags.trunc_eps = trunc_eps;
        }
        cfg.merge_from(flags, set);
        cfg.validate();

        if (app.got_subcommand(run)) {
            const auto& names = snakemin::check_names();
            if (check_name != "all" && std::find(names.begin(), names.end(), check_name) == names.end())
                throw snakemin::ConfigError("unknown check '" + check_name + "'; expected one of: all, " + join(names));
            const auto reports = snakemin::run_check(check_name, cfg);
            bool pass = true;
            for (const auto& r : reports) {
                std::cout << r.to_json() << '\n';
                pass = pass && r.pass;
            }
            return pass ? 0 : 1;
        }
        for (const auto& f : snakemin::dump(kind, cfg)) std::cout << f << '\n';
        return 0;
    } catch (const snakemin::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "check aborted: " << e.what() << '\n';
        return 1;
    }
}
