#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "biasscan/dataset.hpp"

namespace biasscan {

// Sign convention for the multiplicative odds factor q.
// UnderEstimated: observed odds exceed predicted, q >= 1.
// OverEstimated: observed odds fall short, 0 < q <= 1.
enum class Direction { UnderEstimated, OverEstimated };

inline const char* direction_name(Direction d) {
    return d == Direction::UnderEstimated ? "under" : "over";
}

// Observations grouped by distinct clipped prediction; weight is a row count.
struct WeightedPrediction {
    double p;
    double weight;
};

struct ScoreDetail {
    double score = 0.0;   // log-likelihood ratio, >= 0
    double q_star = 1.0;  // +inf (under limit) or 0 (over limit) when at_limit
    bool at_limit = false;
};

struct PenaltyConfig {
    double theta = 0.0;  // per-extra-value weight; 0 recovers the unpenalized scan
};

// Subgroup log-likelihood-ratio term at a fixed q:
//   g(q) = pos * log(q) - sum_i w_i * log(1 - p_i + q p_i)
double contribution(double pos, std::span<const WeightedPrediction> preds, double q);

// Maximizes g over q subject to the direction constraint.
// If the unconstrained maximizer violates the constraint, q is clamped to 1
// and the score is 0. All-positive (under) and all-negative (over) groups hit
// the analytic limit and are returned with at_limit set.
ScoreDetail optimal_q(double sum_y, std::span<const WeightedPrediction> preds,
                      Direction direction);

// Open q-interval on which g exceeds theta, within the direction's domain
// ((1, inf) for under, (0, 1) for over). g is unimodal there, so the region
// is a single interval; nullopt when g never exceeds theta.
struct BenefitInterval {
    double lo;  // may be 0 (over, no positives)
    double hi;  // may be +inf (under, all positives)
};
std::optional<BenefitInterval> benefit_interval(double pos,
                                                std::span<const WeightedPrediction> preds,
                                                Direction direction, double theta);

// ALTSS ordering threshold. Under: the unique root r of g on (1, inf) — g > 0
// exactly on (1, r) — with r = +inf when pos equals the total weight and r = 1
// when the value is never beneficial. Over: mirrored on (0, 1), returning the
// lower endpoint (0 when pos = 0, 1 when never beneficial).
double contribution_threshold(double pos, std::span<const WeightedPrediction> preds,
                              Direction direction);

// theta * (k - 1) per constrained feature, waived when k is 1 or the full arity.
double complexity_penalty(const Subgroup& subgroup, const FeatureSpace& space,
                          const PenaltyConfig& penalty);

struct BiasScore {
    ScoreDetail detail;
    double penalized_score = 0.0;
};

// Scores a subgroup on the dataset; nullopt when the subgroup matches no rows.
std::optional<BiasScore> score_bias(const Dataset& dataset, const Subgroup& subgroup,
                                    Direction direction, const PenaltyConfig& penalty);

// Rewrites the dataset for the classification-error scan: outcome becomes the
// misclassification indicator at the given threshold and the prediction becomes
// the model-implied error probability.
Dataset error_transform(const Dataset& dataset, double classification_threshold);

}  // namespace biasscan
