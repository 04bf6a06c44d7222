#pragma once

#include <cstdint>
#include <vector>

#include "biasscan/scan.hpp"

namespace biasscan {

struct SignificanceReport {
    double observed_score = 0.0;
    std::vector<double> null_scores;  // one penalized max score per replicate
    double p_value = 1.0;             // add-one estimator, never 0
    int replicates = 0;
    std::uint64_t seed = 0;
};

// Parametric bootstrap under the null of a correctly specified classifier:
// each replicate redraws y*_i ~ Bernoulli(p_hat_i) and rescans with the same
// config, so the null distribution reflects the same search power (and the
// implicit multiple-testing correction) as the observed scan.
// `observed` skips the redundant scan of the real data when already available.
SignificanceReport parametric_bootstrap(const Dataset& dataset, const ScanConfig& config,
                                        int replicates, std::uint64_t seed, int jobs = 1,
                                        const ScanResult* observed = nullptr);

}  // namespace biasscan
