#pragma once

#include <cstdint>
#include <vector>

#include "biasscan/dataset.hpp"

namespace biasscan {

// Generator configuration for injected-bias experiments. Rows are spread
// evenly over all feature-value combinations; the total row count is derived
// so the injected region covers roughly `affected_count` observations.
struct SyntheticSpec {
    int feature_count = 4;
    int arity = 6;
    double coefficient_scale = 0.5;
    std::vector<int> injection_pattern;  // per-feature subset sizes, e.g. {2,2,2,6}
    double bias_log_odds = 1.5;
    int affected_count = 100;
    std::uint64_t seed = 0;
    int row_count_override = 0;  // > 0 forces the total row count
};

struct GroundTruth {
    Subgroup biased_subgroup;
    std::size_t biased_cell_count = 0;   // full feature-value combinations inside it
    std::vector<std::size_t> affected_rows;
};

struct SyntheticData {
    Dataset dataset;
    GroundTruth truth;
};

// Additive log-odds model with random per-value coefficients; the recorded
// prediction is the base model's probability, the true outcome probability
// adds bias_log_odds inside the injected subgroup. Deterministic given seed.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

struct DetectionScore {
    double recall = 0.0;
    double precision = 0.0;
    bool empty_detected = false;
};

// Cell-level overlap between a detected subgroup and the injected one, where a
// subgroup's cells are the Cartesian product of its (default-expanded) value
// subsets.
DetectionScore evaluate_detection(const Subgroup& detected, const GroundTruth& truth,
                                  const FeatureSpace& space);

}  // namespace biasscan
