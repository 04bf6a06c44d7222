#include "biasscan/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace biasscan {

namespace {

constexpr double kBracketLo = 1e-6;
constexpr double kBracketHi = 1e6;
constexpr int kMaxIter = 200;

double total_weight(std::span<const WeightedPrediction> preds) {
    double w = 0.0;
    for (const auto& wp : preds) w += wp.weight;
    return w;
}

// h(q) = q * g'(q) = pos - sum_i w_i * q p_i / (1 - p_i + q p_i).
// Strictly decreasing in q; its unique root is the unconstrained maximizer.
double foc(double pos, std::span<const WeightedPrediction> preds, double q) {
    double s = 0.0;
    for (const auto& wp : preds) s += wp.weight * q * wp.p / (1.0 - wp.p + q * wp.p);
    return pos - s;
}

double foc_derivative(std::span<const WeightedPrediction> preds, double q) {
    double s = 0.0;
    for (const auto& wp : preds) {
        double denom = 1.0 - wp.p + q * wp.p;
        s += wp.weight * wp.p * (1.0 - wp.p) / (denom * denom);
    }
    return -s;
}

// Root of h via Newton with a maintained bisection bracket.
// Preconditions: 0 < pos < total weight.
double solve_unconstrained_q(double pos, std::span<const WeightedPrediction> preds) {
    double lo = kBracketLo;
    double hi = kBracketHi;
    // h(q) -> pos > 0 as q -> 0 and -> pos - total < 0 as q -> inf;
    // extend the bracket if the root lies outside the default one.
    while (foc(pos, preds, lo) < 0.0 && lo > 1e-300) lo *= 0.5;
    while (foc(pos, preds, hi) > 0.0 && hi < 1e300) hi *= 2.0;

    // Moment-matching initial guess: observed odds over mean predicted odds.
    double total = total_weight(preds);
    double sum_p = 0.0;
    for (const auto& wp : preds) sum_p += wp.weight * wp.p;
    double guess = (pos / (total - pos)) * ((total - sum_p) / sum_p);
    double q = std::clamp(guess, lo, hi);

    for (int it = 0; it < kMaxIter; ++it) {
        double h = foc(pos, preds, q);
        if (h > 0.0) lo = q;
        else hi = q;
        double dh = foc_derivative(preds, q);
        double next = q - h / dh;
        if (!std::isfinite(next) || next <= lo || next >= hi)
            next = 0.5 * (lo + hi);
        double step = std::abs(next - q);
        q = next;
        if (step <= 1e-13 * q && std::abs(foc(pos, preds, q)) <= 1e-10 * std::max(1.0, pos))
            break;
    }
    return q;
}

// Bisection for g(q) = target on [lo, hi], in log-q space. Requires a sign
// change of g - target across the bracket.
double bisect_contribution(double pos, std::span<const WeightedPrediction> preds, double target,
                           double lo, double hi) {
    double flo = contribution(pos, preds, lo) - target;
    double llo = std::log(lo);
    double lhi = std::log(hi);
    for (int it = 0; it < 200; ++it) {
        double lmid = 0.5 * (llo + lhi);
        double mid = std::exp(lmid);
        double fmid = contribution(pos, preds, mid) - target;
        if ((fmid > 0.0) == (flo > 0.0)) {
            llo = lmid;
            flo = fmid;
        } else {
            lhi = lmid;
        }
        if (lhi - llo <= 1e-14 * std::max(1.0, std::abs(lmid))) break;
    }
    return std::exp(0.5 * (llo + lhi));
}

}  // namespace

double contribution(double pos, std::span<const WeightedPrediction> preds, double q) {
    double s = pos * std::log(q);
    for (const auto& wp : preds) s -= wp.weight * std::log(1.0 - wp.p + q * wp.p);
    return s;
}

ScoreDetail optimal_q(double sum_y, std::span<const WeightedPrediction> preds,
                      Direction direction) {
    const double total = total_weight(preds);
    if (preds.empty() || total <= 0.0)
        throw ConfigError("optimal_q: empty prediction multiset");
    if (sum_y < 0.0 || sum_y > total)
        throw ConfigError("optimal_q: sum_y outside [0, |S|]");

    ScoreDetail detail;
    if (sum_y >= total) {
        if (direction == Direction::UnderEstimated) {
            // Supremum at q -> inf: score -> -sum_i w_i log p_i.
            double s = 0.0;
            for (const auto& wp : preds) s -= wp.weight * std::log(wp.p);
            detail.score = s;
            detail.q_star = std::numeric_limits<double>::infinity();
            detail.at_limit = true;
        }
        return detail;  // over-estimated: clamp to q = 1, score 0
    }
    if (sum_y <= 0.0) {
        if (direction == Direction::OverEstimated) {
            // Supremum at q -> 0: score -> -sum_i w_i log(1 - p_i).
            double s = 0.0;
            for (const auto& wp : preds) s -= wp.weight * std::log(1.0 - wp.p);
            detail.score = s;
            detail.q_star = 0.0;
            detail.at_limit = true;
        }
        return detail;
    }

    double q = solve_unconstrained_q(sum_y, preds);
    if (direction == Direction::UnderEstimated ? q <= 1.0 : q >= 1.0) {
        detail.q_star = 1.0;
        detail.score = 0.0;
        return detail;
    }
    detail.q_star = q;
    detail.score = std::max(0.0, contribution(sum_y, preds, q));
    return detail;
}

std::optional<BenefitInterval> benefit_interval(double pos,
                                                std::span<const WeightedPrediction> preds,
                                                Direction direction, double theta) {
    const double total = total_weight(preds);
    if (total <= 0.0) return std::nullopt;
    const double inf = std::numeric_limits<double>::infinity();

    if (direction == Direction::UnderEstimated) {
        if (pos <= 0.0) return std::nullopt;  // g decreasing on q > 1
        if (pos >= total) {
            // g increasing on (1, inf), supremum -sum w log p.
            double sup = 0.0;
            for (const auto& wp : preds) sup -= wp.weight * std::log(wp.p);
            if (sup <= theta) return std::nullopt;
            if (theta <= 0.0) return BenefitInterval{1.0, inf};
            double hi = 2.0;
            while (contribution(pos, preds, hi) <= theta && hi < 1e300) hi *= 2.0;
            return BenefitInterval{bisect_contribution(pos, preds, theta, 1.0, hi), inf};
        }
        double peak_q = solve_unconstrained_q(pos, preds);
        if (peak_q <= 1.0) return std::nullopt;
        double peak = contribution(pos, preds, peak_q);
        if (peak <= theta) return std::nullopt;
        double lo = theta <= 0.0 ? 1.0 : bisect_contribution(pos, preds, theta, 1.0, peak_q);
        // past the peak g falls to -inf
        double hi_bracket = peak_q * 2.0;
        while (contribution(pos, preds, hi_bracket) >= theta && hi_bracket < 1e300)
            hi_bracket *= 2.0;
        double hi = bisect_contribution(pos, preds, theta, peak_q, hi_bracket);
        return BenefitInterval{lo, hi};
    }

    // Over-estimated: domain (0, 1).
    if (pos >= total) return std::nullopt;  // g increasing, negative below 1
    if (pos <= 0.0) {
        // g decreasing in q; supremum at q -> 0 is -sum w log(1 - p).
        double sup = 0.0;
        for (const auto& wp : preds) sup -= wp.weight * std::log(1.0 - wp.p);
        if (sup <= theta) return std::nullopt;
        if (theta <= 0.0) return BenefitInterval{0.0, 1.0};
        double lo_bracket = 0.5;
        while (contribution(pos, preds, lo_bracket) <= theta && lo_bracket > 1e-300)
            lo_bracket *= 0.5;
        return BenefitInterval{0.0, bisect_contribution(pos, preds, theta, lo_bracket, 1.0)};
    }
    double peak_q = solve_unconstrained_q(pos, preds);
    if (peak_q >= 1.0) return std::nullopt;
    double peak = contribution(pos, preds, peak_q);
    if (peak <= theta) return std::nullopt;
    // toward q -> 0, pos*log(q) drives g to -inf
    double lo_bracket = peak_q * 0.5;
    while (contribution(pos, preds, lo_bracket) >= theta && lo_bracket > 1e-300)
        lo_bracket *= 0.5;
    double lo = bisect_contribution(pos, preds, theta, lo_bracket, peak_q);
    double hi = theta <= 0.0 ? 1.0 : bisect_contribution(pos, preds, theta, peak_q, 1.0);
    return BenefitInterval{lo, hi};
}

double contribution_threshold(double pos, std::span<const WeightedPrediction> preds,
                              Direction direction) {
    auto interval = benefit_interval(pos, preds, direction, 0.0);
    if (direction == Direction::UnderEstimated)
        return interval ? interval->hi : 1.0;
    return interval ? interval->lo : 1.0;
}

double complexity_penalty(const Subgroup& subgroup, const FeatureSpace& space,
                          const PenaltyConfig& penalty) {
    validate_subgroup(subgroup, space);
    double total = 0.0;
    for (const auto& [name, values] : subgroup) {
        std::size_t arity = space.arity(*space.find_feature(name));
        std::size_t k = values.size();
        if (k == 1 || k == arity) continue;
        total += penalty.theta * static_cast<double>(k - 1);
    }
    return total;
}

std::optional<BiasScore> score_bias(const Dataset& dataset, const Subgroup& subgroup,
                                    Direction direction, const PenaltyConfig& penalty) {
    auto mask = subgroup_mask(dataset, subgroup);
    const auto& pcodes = dataset.prediction_codes();
    const auto& ptable = dataset.distinct_predictions();
    const auto& y = dataset.outcomes();

    std::vector<double> weight(ptable.size(), 0.0);
    double sum_y = 0.0;
    double n = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        weight[static_cast<std::size_t>(pcodes[i])] += 1.0;
        sum_y += y[i];
        n += 1.0;
    }
    if (n == 0.0) return std::nullopt;

    std::vector<WeightedPrediction> preds;
    for (std::size_t c = 0; c < ptable.size(); ++c)
        if (weight[c] > 0.0) preds.push_back({ptable[c], weight[c]});

    BiasScore result;
    result.detail = optimal_q(sum_y, preds, direction);
    result.penalized_score =
        result.detail.score - complexity_penalty(subgroup, dataset.feature_space(), penalty);
    return result;
}

Dataset error_transform(const Dataset& dataset, double classification_threshold) {
    if (!(classification_threshold > 0.0 && classification_threshold < 1.0))
        throw ConfigError("classification threshold must lie in (0,1)");
    const std::size_t n = dataset.row_count();
    std::vector<std::uint8_t> z(n);
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) {
        double p = dataset.predictions()[i];
        int yhat = p >= classification_threshold ? 1 : 0;
        z[i] = dataset.outcomes()[i] != yhat ? 1 : 0;
        e[i] = clip_prediction(yhat == 0 ? p : 1.0 - p);
    }
    std::vector<std::vector<std::int32_t>> codes;
    for (std::size_t f = 0; f < dataset.feature_space().feature_count(); ++f)
        codes.push_back(dataset.codes(f));
    return Dataset(dataset.feature_space(), std::move(codes), std::move(z), std::move(e));
}

}  // namespace biasscan
