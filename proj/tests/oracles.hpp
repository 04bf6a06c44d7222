// Independent oracles used by the unit and acceptance suites. These
// deliberately avoid the library's solver and search paths: dense grid search
// over q and exhaustive subset/subgroup enumeration.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "biasscan/dataset.hpp"
#include "biasscan/rng.hpp"
#include "biasscan/scoring.hpp"

namespace oracles {

using biasscan::Dataset;
using biasscan::Direction;
using biasscan::FeatureSpace;
using biasscan::SplitRng;
using biasscan::Subgroup;
using biasscan::WeightedPrediction;

inline double contribution_direct(double pos, const std::vector<WeightedPrediction>& preds,
                                  double q) {
    double s = pos * std::log(q);
    for (const auto& wp : preds) s -= wp.weight * std::log(1.0 - wp.p + q * wp.p);
    return s;
}

struct GridResult {
    double score;
    double q;
};

// Dense log-spaced grid over [1e-6, 1e6] restricted to the direction's
// half-line, always including q = 1 and the analytic limits.
inline GridResult grid_search_q(double sum_y, const std::vector<WeightedPrediction>& preds,
                                Direction direction, int points = 100000) {
    double total = 0.0;
    for (const auto& wp : preds) total += wp.weight;

    GridResult best{0.0, 1.0};  // q = 1 is always feasible and scores 0
    if (direction == Direction::UnderEstimated && sum_y >= total) {
        double s = 0.0;
        for (const auto& wp : preds) s -= wp.weight * std::log(wp.p);
        return {s, std::numeric_limits<double>::infinity()};
    }
    if (direction == Direction::OverEstimated && sum_y <= 0.0) {
        double s = 0.0;
        for (const auto& wp : preds) s -= wp.weight * std::log(1.0 - wp.p);
        return {s, 0.0};
    }

    double lo = std::log(1e-6);
    double hi = std::log(1e6);
    // Coarse pass, then a fine pass bracketing the coarse maximum so the
    // score is accurate well beyond the coarse grid spacing.
    for (int pass = 0; pass < 2; ++pass) {
        double best_log = std::log(best.q);
        for (int k = 0; k < points; ++k) {
            double q = std::exp(lo + (hi - lo) * k / (points - 1));
            if (direction == Direction::UnderEstimated && q < 1.0) continue;
            if (direction == Direction::OverEstimated && q > 1.0) continue;
            double s = contribution_direct(sum_y, preds, q);
            if (s > best.score) {
                best = {s, q};
                best_log = lo + (hi - lo) * k / (points - 1);
            }
        }
        double step = (hi - lo) / (points - 1);
        lo = best_log - 2.0 * step;
        hi = best_log + 2.0 * step;
    }
    return best;
}

// One aggregated value of a categorical feature.
struct ValueFixture {
    double pos = 0.0;
    std::vector<WeightedPrediction> preds;
};

struct SubsetResult {
    std::vector<std::uint8_t> mask;
    double penalized = -std::numeric_limits<double>::infinity();
    double score = 0.0;
};

// Exhaustive max over all 2^arity - 1 value subsets, with the same
// penalty and tie-breaking (smaller subset, then lexicographic mask) the
// implementation claims.
inline SubsetResult exhaustive_feature_step(const std::vector<ValueFixture>& values,
                                            Direction direction, double theta) {
    const std::size_t arity = values.size();
    SubsetResult best;
    std::size_t best_k = 0;
    for (std::size_t bits = 1; bits < (std::size_t{1} << arity); ++bits) {
        double pos = 0.0;
        double weight = 0.0;
        std::vector<WeightedPrediction> pooled;
        std::vector<std::uint8_t> mask(arity, 0);
        std::size_t k = 0;
        for (std::size_t v = 0; v < arity; ++v) {
            if (!(bits & (std::size_t{1} << v))) continue;
            mask[v] = 1;
            ++k;
            pos += values[v].pos;
            for (const auto& wp : values[v].preds) {
                pooled.push_back(wp);
                weight += wp.weight;
            }
        }
        if (weight <= 0.0) continue;
        double score = biasscan::optimal_q(pos, pooled, direction).score;
        double pen = (k == 1 || k == arity) ? 0.0 : theta * static_cast<double>(k - 1);
        double value = score - pen;
        if (value > best.penalized ||
            (value == best.penalized && (k < best_k || (k == best_k && mask < best.mask)))) {
            best.mask = mask;
            best.penalized = value;
            best.score = score;
            best_k = k;
        }
    }
    return best;
}

// Exhaustive max over every subgroup (Cartesian product of non-empty value
// subsets). Only usable on tiny feature spaces.
struct ExhaustiveScanResult {
    Subgroup subgroup;
    double penalized = -std::numeric_limits<double>::infinity();
};

inline ExhaustiveScanResult exhaustive_scan(const Dataset& dataset, Direction direction,
                                            double theta) {
    const FeatureSpace& space = dataset.feature_space();
    const std::size_t nfeat = space.feature_count();
    std::vector<std::size_t> subset(nfeat, 0);

    ExhaustiveScanResult best;
    auto visit = [&](auto&& self, std::size_t f) -> void {
        if (f == nfeat) {
            Subgroup sg;
            for (std::size_t g = 0; g < nfeat; ++g) {
                std::size_t arity = space.arity(g);
                if (subset[g] + 1 == (std::size_t{1} << arity)) continue;  // full set
                std::set<std::string> values;
                for (std::size_t v = 0; v < arity; ++v)
                    if (subset[g] & (std::size_t{1} << v))
                        values.insert(space.feature(g).values[v]);
                sg.emplace(space.feature(g).name, std::move(values));
            }
            auto scored = biasscan::score_bias(dataset, sg, direction, {theta});
            if (scored && scored->penalized_score > best.penalized) {
                best.penalized = scored->penalized_score;
                best.subgroup = std::move(sg);
            }
            return;
        }
        std::size_t arity = space.arity(f);
        for (std::size_t bits = 1; bits < (std::size_t{1} << arity); ++bits) {
            subset[f] = bits;
            self(self, f + 1);
        }
    };
    visit(visit, 0);
    return best;
}

// Small random dataset: per-feature codes uniform, p uniform in (plo, phi),
// y ~ Bernoulli(p) with optional extra log-odds in a planted cell.
inline Dataset random_dataset(SplitRng& rng, std::size_t n, std::size_t nfeat,
                              std::size_t arity, double plo = 0.1, double phi = 0.9,
                              int distinct_p = 0) {
    std::vector<FeatureSpace::Feature> features(nfeat);
    for (std::size_t f = 0; f < nfeat; ++f) {
        features[f].name = "f" + std::to_string(f + 1);
        for (std::size_t v = 0; v < arity; ++v)
            features[f].values.push_back("v" + std::to_string(v + 1));
    }
    std::vector<double> ptable;
    if (distinct_p > 0)
        for (int k = 0; k < distinct_p; ++k)
            ptable.push_back(plo + (phi - plo) * rng.next_unit());

    std::vector<std::vector<std::int32_t>> codes(nfeat, std::vector<std::int32_t>(n));
    std::vector<std::uint8_t> y(n);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < nfeat; ++f)
            codes[f][i] = static_cast<std::int32_t>(rng.next_below(arity));
        p[i] = distinct_p > 0 ? ptable[rng.next_below(ptable.size())]
                              : plo + (phi - plo) * rng.next_unit();
        y[i] = rng.next_unit() < p[i] ? 1 : 0;
    }
    return Dataset(FeatureSpace(std::move(features)), std::move(codes), std::move(y),
                   std::move(p));
}

}  // namespace oracles
