#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biasscan/dataset.hpp"
#include "biasscan/scoring.hpp"

namespace biasscan {

enum class ScanDirection { Under, Over, Both };

inline const char* scan_direction_name(ScanDirection d) {
    switch (d) {
        case ScanDirection::Under: return "under";
        case ScanDirection::Over: return "over";
        default: return "both";
    }
}

struct ScanConfig {
    ScanDirection direction = ScanDirection::Both;
    PenaltyConfig penalty;
    int restarts = 50;
    std::uint64_t seed = 0;
    int max_sweeps = 100;
};

struct ScanResult {
    Subgroup subgroup;
    ScoreDetail detail;
    double penalized_score = 0.0;
    Direction direction = Direction::UnderEstimated;
    SubgroupStats stats;
    int sweeps_used = 0;
    int restart_index = 0;
};

struct FeatureStepResult {
    std::vector<std::uint8_t> value_mask;  // one flag per value of the feature
    ScoreDetail detail;                    // score of the whole resulting subgroup
    double feature_penalty = 0.0;          // penalty contribution of this feature alone
};

// Exact best value subset for one feature, holding every other constraint
// fixed. Candidates are the active sets of the per-value benefit intervals
// (for theta = 0 these are the threshold-ordered prefixes), every singleton,
// and the full set; the best middle-sized subset is always among them.
FeatureStepResult scan_feature(const Dataset& dataset, const Subgroup& subgroup,
                               const std::string& feature, Direction direction,
                               const PenaltyConfig& penalty);

// Coordinate ascent over features with random restarts. Deterministic for a
// given (dataset, config) regardless of jobs.
ScanResult mdss_scan(const Dataset& dataset, const ScanConfig& config, int jobs = 1);

}  // namespace biasscan
