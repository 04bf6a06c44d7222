#include "biasscan/scan.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>

#include "biasscan/parallel.hpp"
#include "biasscan/rng.hpp"

namespace biasscan {

namespace {

// Internal subgroup form: one inclusion mask per feature, all-ones = unconstrained.
using MaskSubgroup = std::vector<std::vector<std::uint8_t>>;

MaskSubgroup unconstrained_masks(const FeatureSpace& space) {
    MaskSubgroup masks(space.feature_count());
    for (std::size_t f = 0; f < space.feature_count(); ++f)
        masks[f].assign(space.arity(f), 1);
    return masks;
}

MaskSubgroup masks_from_subgroup(const Subgroup& subgroup, const FeatureSpace& space) {
    validate_subgroup(subgroup, space);
    auto masks = unconstrained_masks(space);
    for (const auto& [name, values] : subgroup) {
        std::size_t f = *space.find_feature(name);
        masks[f].assign(space.arity(f), 0);
        for (const auto& v : values) masks[f][*space.find_value(f, v)] = 1;
    }
    return masks;
}

Subgroup subgroup_from_masks(const MaskSubgroup& masks, const FeatureSpace& space) {
    Subgroup out;
    for (std::size_t f = 0; f < masks.size(); ++f) {
        std::size_t k = static_cast<std::size_t>(
            std::count(masks[f].begin(), masks[f].end(), std::uint8_t{1}));
        if (k == space.arity(f)) continue;
        std::set<std::string> values;
        for (std::size_t v = 0; v < masks[f].size(); ++v)
            if (masks[f][v]) values.insert(space.feature(f).values[v]);
        out.emplace(space.feature(f).name, std::move(values));
    }
    return out;
}

double mask_penalty(const std::vector<std::uint8_t>& mask, double theta) {
    std::size_t k = static_cast<std::size_t>(
        std::count(mask.begin(), mask.end(), std::uint8_t{1}));
    if (k == 1 || k == mask.size()) return 0.0;
    return theta * static_cast<double>(k - 1);
}

double total_penalty(const MaskSubgroup& masks, double theta) {
    double pen = 0.0;
    for (const auto& m : masks) pen += mask_penalty(m, theta);
    return pen;
}

struct ValueAgg {
    double pos = 0.0;
    double weight = 0.0;
    std::vector<WeightedPrediction> preds;
};

// Per-value aggregation of rows matching every constraint except feature j,
// grouped by distinct prediction.
std::vector<ValueAgg> aggregate_feature(const Dataset& dataset, const MaskSubgroup& masks,
                                        std::size_t j) {
    const std::size_t n = dataset.row_count();
    const std::size_t nfeat = masks.size();
    const std::size_t arity = masks[j].size();
    const std::size_t npred = dataset.distinct_predictions().size();
    const auto& pcodes = dataset.prediction_codes();
    const auto& y = dataset.outcomes();

    thread_local std::vector<double> weight_buf;
    thread_local std::vector<double> pos_buf;
    thread_local std::vector<std::size_t> touched;
    const std::size_t slots = arity * npred;
    if (weight_buf.size() < slots) {
        weight_buf.resize(slots, 0.0);
        pos_buf.resize(slots, 0.0);
    }
    touched.clear();

    for (std::size_t i = 0; i < n; ++i) {
        bool match = true;
        for (std::size_t f = 0; f < nfeat; ++f) {
            if (f == j) continue;
            if (!masks[f][static_cast<std::size_t>(dataset.codes(f)[i])]) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        std::size_t v = static_cast<std::size_t>(dataset.codes(j)[i]);
        std::size_t slot = v * npred + static_cast<std::size_t>(pcodes[i]);
        if (weight_buf[slot] == 0.0) touched.push_back(slot);
        weight_buf[slot] += 1.0;
        pos_buf[slot] += y[i];
    }

    std::vector<ValueAgg> aggs(arity);
    std::sort(touched.begin(), touched.end());  // deterministic pred order per value
    const auto& ptable = dataset.distinct_predictions();
    for (std::size_t slot : touched) {
        std::size_t v = slot / npred;
        std::size_t pc = slot % npred;
        aggs[v].preds.push_back({ptable[pc], weight_buf[slot]});
        aggs[v].weight += weight_buf[slot];
        aggs[v].pos += pos_buf[slot];
        weight_buf[slot] = 0.0;
        pos_buf[slot] = 0.0;
    }
    return aggs;
}

struct StepOutcome {
    std::vector<std::uint8_t> mask;
    ScoreDetail detail;
    double feature_penalty = 0.0;
};

// Exact single-feature optimization: evaluates singletons, the full set, and
// the active sets of the per-value benefit intervals.
StepOutcome step_feature(const Dataset& dataset, const MaskSubgroup& masks, std::size_t j,
                         Direction direction, double theta) {
    const std::size_t arity = masks[j].size();
    auto aggs = aggregate_feature(dataset, masks, j);

    std::vector<std::optional<BenefitInterval>> intervals(arity);
    for (std::size_t v = 0; v < arity; ++v)
        if (aggs[v].weight > 0.0)
            intervals[v] = benefit_interval(aggs[v].pos, aggs[v].preds, direction, theta);

    std::set<std::vector<std::uint8_t>> candidates;
    for (std::size_t v = 0; v < arity; ++v) {
        if (aggs[v].weight <= 0.0) continue;
        std::vector<std::uint8_t> m(arity, 0);
        m[v] = 1;
        candidates.insert(std::move(m));
    }
    candidates.insert(std::vector<std::uint8_t>(arity, 1));

    // q test points: geometric midpoints between consecutive interval
    // endpoints, plus probes beyond the extremes of the finite endpoints.
    std::vector<double> endpoints;
    for (const auto& iv : intervals) {
        if (!iv) continue;
        if (iv->lo > 0.0 && std::isfinite(iv->lo)) endpoints.push_back(iv->lo);
        if (iv->hi > 0.0 && std::isfinite(iv->hi)) endpoints.push_back(iv->hi);
    }
    if (!endpoints.empty()) {
        std::sort(endpoints.begin(), endpoints.end());
        endpoints.erase(std::unique(endpoints.begin(), endpoints.end()), endpoints.end());
        std::vector<double> probes;
        probes.push_back(endpoints.front() * 0.5);
        for (std::size_t k = 0; k + 1 < endpoints.size(); ++k)
            probes.push_back(std::sqrt(endpoints[k] * endpoints[k + 1]));
        probes.push_back(endpoints.back() * 2.0);
        for (double q : probes) {
            std::vector<std::uint8_t> m(arity, 0);
            std::size_t k = 0;
            for (std::size_t v = 0; v < arity; ++v) {
                if (intervals[v] && intervals[v]->lo < q && q < intervals[v]->hi) {
                    m[v] = 1;
                    ++k;
                }
            }
            if (k >= 2) candidates.insert(std::move(m));
        }
    }

    StepOutcome best;
    double best_value = -std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (const auto& mask : candidates) {
        double pos = 0.0;
        double weight = 0.0;
        std::vector<WeightedPrediction> pooled;
        std::size_t k = 0;
        for (std::size_t v = 0; v < arity; ++v) {
            if (!mask[v]) continue;
            ++k;
            pos += aggs[v].pos;
            weight += aggs[v].weight;
            pooled.insert(pooled.end(), aggs[v].preds.begin(), aggs[v].preds.end());
        }
        if (weight <= 0.0) continue;
        ScoreDetail detail = optimal_q(pos, pooled, direction);
        double pen = (k == 1 || k == arity) ? 0.0 : theta * static_cast<double>(k - 1);
        double value = detail.score - pen;
        bool better = value > best_value ||
                      (value == best_value &&
                       (k < best_k || (k == best_k && mask < best.mask)));
        if (better) {
            best.mask = mask;
            best.detail = detail;
            best.feature_penalty = pen;
            best_value = value;
            best_k = k;
        }
    }
    return best;
}

std::size_t count_matching(const Dataset& dataset, const MaskSubgroup& masks) {
    const std::size_t n = dataset.row_count();
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool match = true;
        for (std::size_t f = 0; f < masks.size(); ++f) {
            if (!masks[f][static_cast<std::size_t>(dataset.codes(f)[i])]) {
                match = false;
                break;
            }
        }
        count += match;
    }
    return count;
}

struct RestartOutcome {
    MaskSubgroup masks;
    ScoreDetail detail;
    double penalized = -std::numeric_limits<double>::infinity();
    int sweeps = 0;
};

RestartOutcome run_restart(const Dataset& dataset, Direction direction,
                           const ScanConfig& config, std::uint64_t restart_seed) {
    SplitRng rng(restart_seed);
    const auto& space = dataset.feature_space();
    const std::size_t nfeat = space.feature_count();

    // Random start: each value kept with probability 1/2, empty selections
    // resampled; fall back to the all-data subgroup if nothing matches.
    MaskSubgroup masks(nfeat);
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        for (std::size_t f = 0; f < nfeat; ++f) {
            auto& m = masks[f];
            m.assign(space.arity(f), 0);
            bool any = false;
            while (!any) {
                for (std::size_t v = 0; v < m.size(); ++v) {
                    m[v] = rng.next_bool() ? 1 : 0;
                    any = any || m[v];
                }
            }
        }
        ok = count_matching(dataset, masks) > 0;
    }
    if (!ok) masks = unconstrained_masks(space);

    RestartOutcome out;
    double prev = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(nfeat);
    for (std::size_t f = 0; f < nfeat; ++f) order[f] = f;
    ScoreDetail detail;
    double cur = -std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
        rng.shuffle(order);
        for (std::size_t j : order) {
            auto step = step_feature(dataset, masks, j, direction, config.penalty.theta);
            masks[j] = std::move(step.mask);
            detail = step.detail;
        }
        cur = detail.score - total_penalty(masks, config.penalty.theta);
        out.sweeps = sweep;
        if (cur - prev <= 1e-12) break;
        prev = cur;
    }
    out.masks = std::move(masks);
    out.detail = detail;
    out.penalized = cur;
    return out;
}

ScanResult scan_direction(const Dataset& dataset, Direction direction, const ScanConfig& config,
                          int jobs) {
    const auto& space = dataset.feature_space();
    std::uint64_t dir_tag = direction == Direction::UnderEstimated ? 0 : 1;

    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(config.restarts));
    parallel_for(outcomes.size(), jobs, [&](std::size_t r) {
        outcomes[r] = run_restart(dataset, direction, config,
                                  derive_seed(config.seed, dir_tag, r));
    });

    // Deterministic reduction: score, then lexicographically smaller subgroup,
    // then earlier restart.
    std::size_t best = 0;
    Subgroup best_sg = subgroup_from_masks(outcomes[0].masks, space);
    for (std::size_t r = 1; r < outcomes.size(); ++r) {
        if (outcomes[r].penalized < outcomes[best].penalized) continue;
        Subgroup sg = subgroup_from_masks(outcomes[r].masks, space);
        if (outcomes[r].penalized > outcomes[best].penalized || sg < best_sg) {
            best = r;
            best_sg = std::move(sg);
        }
    }

    ScanResult result;
    result.subgroup = std::move(best_sg);
    result.detail = outcomes[best].detail;
    result.penalized_score = outcomes[best].penalized;
    result.direction = direction;
    result.stats = subgroup_stats(dataset, result.subgroup);
    result.sweeps_used = outcomes[best].sweeps;
    result.restart_index = static_cast<int>(best);
    return result;
}

}  // namespace

FeatureStepResult scan_feature(const Dataset& dataset, const Subgroup& subgroup,
                               const std::string& feature, Direction direction,
                               const PenaltyConfig& penalty) {
    const auto& space = dataset.feature_space();
    auto f = space.find_feature(feature);
    if (!f) throw ConfigError("scan_feature: unknown feature '" + feature + "'");
    auto masks = masks_from_subgroup(subgroup, space);

    // Relax the scanned feature, then require the rest to match something.
    auto relaxed = masks;
    relaxed[*f].assign(space.arity(*f), 1);
    if (count_matching(dataset, relaxed) == 0)
        throw ConfigError("scan_feature: remaining constraints match no rows");

    auto step = step_feature(dataset, masks, *f, direction, penalty.theta);
    FeatureStepResult out;
    out.value_mask = std::move(step.mask);
    out.detail = step.detail;
    out.feature_penalty = step.feature_penalty;
    return out;
}

ScanResult mdss_scan(const Dataset& dataset, const ScanConfig& config, int jobs) {
    if (config.restarts < 1) throw ConfigError("restarts must be >= 1");
    if (config.max_sweeps < 1) throw ConfigError("max_sweeps must be >= 1");

    if (config.direction == ScanDirection::Under)
        return scan_direction(dataset, Direction::UnderEstimated, config, jobs);
    if (config.direction == ScanDirection::Over)
        return scan_direction(dataset, Direction::OverEstimated, config, jobs);

    auto under = scan_direction(dataset, Direction::UnderEstimated, config, jobs);
    auto over = scan_direction(dataset, Direction::OverEstimated, config, jobs);
    return over.penalized_score > under.penalized_score ? over : under;
}

}  // namespace biasscan
