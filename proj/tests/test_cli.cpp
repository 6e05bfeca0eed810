#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sblt/experiments.hpp"

using namespace sblt;

namespace {

std::string tmpdir(const char* tag) {
    auto p = std::filesystem::temp_directory_path() / (std::string("sblt_test_") + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

}  // namespace

TEST_CASE("experiment config parsing and validation") {
    CHECK_THROWS_AS(parse_experiment_config("{not json"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(R"({"kind":"bogus"})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(R"({"kind":"sim_moments"})"),
                    std::invalid_argument);  // replicates missing
    CHECK_THROWS_AS(parse_experiment_config(
                        R"({"kind":"sim_moments","replicates":10,"params":{"dx":0.02,"dt":0.01}})"),
                    std::invalid_argument);  // CFL violation
    CHECK_THROWS_AS(parse_experiment_config(R"({"kind":"f_profile","params":{"half_width":4}})"),
                    std::invalid_argument);

    auto cfg = parse_experiment_config(
        R"({"kind":"sim_moments","seed":7,"replicates":50,"output_dir":"/tmp/x","params":{"dx":0.05}})");
    CHECK(cfg.kind == "sim_moments");
    CHECK(cfg.seed == 7);
    CHECK(cfg.replicates == 50);
}

TEST_CASE("sim_moments run produces a reproducible manifest") {
    ExperimentConfig cfg;
    cfg.kind = "sim_moments";
    cfg.seed = 99;
    cfg.replicates = 150;
    cfg.output_dir = tmpdir("simmom");
    cfg.params["dx"] = 0.05;

    auto out1 = run_experiment(cfg);
    CHECK_FALSE(out1.failed);
    CHECK(std::filesystem::exists(cfg.output_dir + "/manifest.json"));
    CHECK(std::filesystem::exists(cfg.output_dir + "/masses.csv"));
    CHECK(out1.manifest.at("summary").contains("mean_mass"));
    CHECK(out1.manifest.at("provenance").contains("mean_mass"));

    auto out2 = run_experiment(cfg);  // deterministic stages reproduce bit-identically
    CHECK(out1.manifest.at("summary") == out2.manifest.at("summary"));
    CHECK(out1.manifest.at("config_hash") == out2.manifest.at("config_hash"));

    double z = out1.manifest.at("summary").at("mean_mass_z").get<double>();
    CHECK(std::fabs(z) < 5.0);
}

TEST_CASE("f_profile run and report merging") {
    ExperimentConfig fcfg;
    fcfg.kind = "f_profile";
    fcfg.output_dir = tmpdir("fprof");
    fcfg.params["intervals"] = 1024;
    auto fout = run_experiment(fcfg);
    CHECK_FALSE(fout.failed);

    ExperimentConfig scfg;
    scfg.kind = "sim_moments";
    scfg.seed = 3;
    scfg.replicates = 60;
    scfg.output_dir = tmpdir("simmom2");
    scfg.params["dx"] = 0.05;
    auto sout = run_experiment(scfg);
    CHECK_FALSE(sout.failed);

    // single manifest: one row
    auto csv1 = report_csv({fcfg.output_dir + "/manifest.json"});
    CHECK(std::count(csv1.begin(), csv1.end(), '\n') == 2);
    // duplicates: identical rows
    auto csv2 =
        report_csv({fcfg.output_dir + "/manifest.json", fcfg.output_dir + "/manifest.json"});
    auto second_line = csv2.substr(csv2.find('\n') + 1);
    auto row1 = second_line.substr(0, second_line.find('\n'));
    auto row2 = second_line.substr(second_line.find('\n') + 1);
    row2 = row2.substr(0, row2.find('\n'));
    CHECK(row1 == row2);
    // mixed kinds: union of columns, empty cells where absent
    auto csv3 =
        report_csv({fcfg.output_dir + "/manifest.json", scfg.output_dir + "/manifest.json"});
    CHECK(csv3.find("f_residual") != std::string::npos);
    CHECK(csv3.find("mean_mass") != std::string::npos);
    CHECK(csv3.find(",,") != std::string::npos);

    std::filesystem::remove_all(fcfg.output_dir);
    std::filesystem::remove_all(scfg.output_dir);
}
