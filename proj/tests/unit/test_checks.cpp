#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "snakemin/checks.hpp"

using namespace snakemin;

TEST_CASE("run config validation") {
    RunConfig c;
    c.n = 0;
    CHECK_THROWS_AS(run_check("law-wstar", c), ConfigError);
    c = RunConfig{};
    CHECK_THROWS_AS(run_check("no-such-check", c), ConfigError);
    c.format = "xml";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.dt = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(R"({"bogus": 1})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(R"({"n": 0})").validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json("not json"), ConfigError);
    CHECK(check_names().size() == 12);
}

TEST_CASE("config file values are overridden by flags") {
    RunConfig file = RunConfig::from_json(R"({"seed": 5, "n": 100, "alpha": 0.05})");
    RunConfig flags;
    flags.master_seed = 9;
    file.merge_from(flags, {"seed"});
    CHECK(file.master_seed == 9);
    CHECK(file.n == 100u);
    CHECK(file.alpha_level == 0.05);
}

TEST_CASE("power guard refuses underpowered runs") {
    RunConfig c;
    c.n = 1000;
    CHECK_THROWS_AS(run_check("law-wstar", c), ConfigError);
    CHECK_THROWS_AS(run_check("super-min-cdf", c), ConfigError);
}

TEST_CASE("checks are deterministic and independent of the thread count") {
    RunConfig c;
    c.n = 40000;
    c.threads = 1;
    const auto a = run_check("super-joint", c);
    c.threads = 3;
    const auto b = run_check("super-joint", c);
    REQUIRE(a.size() == 1);
    CHECK(a[0].statistic == b[0].statistic);
    CHECK(a[0].notes == b[0].notes);
    CHECK(a[0].pass);
}

TEST_CASE("raw output files and dumps") {
    const auto dir = std::filesystem::temp_directory_path() / "snakemin_unit_out";
    std::filesystem::remove_all(dir);
    RunConfig c;
    c.n = 40000;
    c.output_dir = dir.string();
    run_check("super-joint", c);
    CHECK(std::filesystem::exists(dir / "super-joint.csv"));
    CHECK(std::filesystem::exists(dir / "verdicts.jsonl"));
    CHECK(std::filesystem::exists(dir / "run_config.json"));
    c.n = 2;
    const auto files = dump("bessel-paths", c);
    REQUIRE(files.size() == 1);
    std::ifstream in(files[0]);
    std::string header;
    std::getline(in, header);
    CHECK(header == "replicate,t,value\r");
    CHECK(dump("super-samples", c).size() == 1);
    CHECK_THROWS_AS(dump("nothing", c), ConfigError);
    c.output_dir.clear();
    CHECK_THROWS_AS(dump("bessel-paths", c), ConfigError);
    std::filesystem::remove_all(dir);
}
