#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "biasscan/dataset.hpp"
#include "biasscan/scan.hpp"
#include "biasscan/significance.hpp"
#include "biasscan/synth.hpp"

namespace biasscan {

inline const char* kToolName = "biasscan";
inline const char* kToolVersion = "0.1.0";

// Everything the audit command exposes. The echo of this struct inside the
// report is sufficient to reproduce the report byte-for-byte; output path and
// worker count are deliberately not part of it.
struct AuditConfig {
    std::string data_path;
    std::string outcome_column;
    std::string prediction_column;
    std::vector<FeatureConfig> features;
    ScanDirection direction = ScanDirection::Both;
    double theta = 0.0;
    int restarts = 50;
    int max_sweeps = 100;
    int bootstrap = 99;  // 0 disables significance estimation
    std::uint64_t seed = 0;
    bool error_scan = false;
    double classification_threshold = 0.5;
    bool theta_sweep = false;
    double sweep_lo = 0.0;
    double sweep_hi = 0.0;
    int sweep_steps = 0;
};

nlohmann::ordered_json audit_config_to_json(const AuditConfig& config);
AuditConfig audit_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json subgroup_to_json(const Subgroup& subgroup);
nlohmann::ordered_json scan_result_to_json(const ScanResult& result);

// Ingest, scan, bootstrap, assemble the report.
nlohmann::ordered_json run_audit(const AuditConfig& config, int jobs = 1);

// Audit of an in-memory dataset (used by run_audit and the experiment driver).
nlohmann::ordered_json audit_dataset(const Dataset& dataset, const AuditConfig& config,
                                     int jobs = 1);

struct ExperimentConfig {
    std::vector<std::vector<int>> patterns;
    int repetitions = 50;
    int feature_count = 4;
    int arity = 6;
    double bias_log_odds = 1.5;
    int affected_count = 100;
    double coefficient_scale = 0.5;
    ScanDirection direction = ScanDirection::Both;
    double theta = 0.0;
    int restarts = 50;
    int max_sweeps = 100;
    int bootstrap = 0;  // 0 skips significance, detection rate reported as null
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

nlohmann::ordered_json run_experiment(const ExperimentConfig& config, int jobs = 1);

// Flattens the experiment metrics table to CSV.
std::string experiment_to_csv(const nlohmann::ordered_json& report);

}  // namespace biasscan
