#pragma once
// Batch experiment driver: config parsing/validation, pipeline orchestration
// (spectral -> F -> constants -> simulation -> local time -> moments),
// atomic artifact persistence, and manifest/report emission.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sblt/localtime.hpp"
#include "sblt/sbm.hpp"

namespace sblt {

struct ExperimentConfig {
    std::string kind;  // spectrum | f_profile | v_scaling | sim_moments |
                       // localtime_dim | moment_validation | constants
    uint64_t seed = 1;
    long replicates = 0;
    std::string output_dir = ".";
    nlohmann::json params = nlohmann::json::object();
};

ExperimentConfig parse_experiment_config(const std::string& text);  // throws invalid_argument
void validate_experiment_config(const ExperimentConfig& cfg);       // throws invalid_argument

// ---- building blocks shared with the acceptance suite ----

struct SimMomentsResult {
    long replicates = 0;
    double mean = 0.0, mean_se = 0.0;
    double var = 0.0, var_se = 0.0;
    double extinct_rate = 0.0, extinct_se = 0.0;
    std::vector<double> masses;
};
SimMomentsResult run_sim_moments(double dx, double t, double mass, long replicates,
                                 uint64_t seed);

struct DimensionResult {
    std::vector<double> estimates;  // one per surviving replicate
    double median = 0.0;
    long attempts = 0;
    long surviving = 0;
    std::string sample_fit_json;
};
DimensionResult run_localtime_dim(double dx, double t, long min_surviving, uint64_t seed);

struct RunOutcome {
    nlohmann::json manifest;
    bool failed = false;
    std::string failure;
};

// Executes the configured pipeline, writes artifacts plus manifest.json
// under cfg.output_dir (atomic temp-file renames), and returns the manifest.
// Stage failures are recorded in the manifest and flagged in the outcome.
RunOutcome run_experiment(const ExperimentConfig& cfg);

// Merged CSV (header row, union of summary columns) of several manifests.
// Manifests from a different schema version are rejected.
std::string report_csv(const std::vector<std::string>& manifest_paths);

void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace sblt
