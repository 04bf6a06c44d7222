#include "biasscan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "biasscan/rng.hpp"

namespace biasscan {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.feature_count < 1) throw ConfigError("synthetic: feature_count must be >= 1");
    if (spec.arity < 1) throw ConfigError("synthetic: arity must be >= 1");
    std::vector<int> pattern = spec.injection_pattern;
    if (pattern.empty()) pattern.assign(static_cast<std::size_t>(spec.feature_count), spec.arity);
    if (pattern.size() != static_cast<std::size_t>(spec.feature_count))
        throw ConfigError("synthetic: injection pattern length must equal feature_count");
    for (int k : pattern)
        if (k < 1 || k > spec.arity)
            throw ConfigError("synthetic: injection subset sizes must lie in [1, arity]");

    const std::size_t nfeat = static_cast<std::size_t>(spec.feature_count);
    const std::size_t arity = static_cast<std::size_t>(spec.arity);
    std::size_t cells = 1;
    for (std::size_t f = 0; f < nfeat; ++f) cells *= arity;

    double coverage = 1.0;
    for (int k : pattern) coverage *= static_cast<double>(k) / static_cast<double>(spec.arity);
    std::size_t n;
    if (spec.row_count_override > 0) {
        n = static_cast<std::size_t>(spec.row_count_override);
    } else {
        if (spec.affected_count < 1) throw ConfigError("synthetic: affected_count must be >= 1");
        n = static_cast<std::size_t>(
            std::llround(static_cast<double>(spec.affected_count) / coverage));
        if (n < 1) throw ConfigError("synthetic: affected_count yields an empty dataset");
    }

    // Feature space f1..fF with values v1..vA.
    std::vector<FeatureSpace::Feature> features(nfeat);
    for (std::size_t f = 0; f < nfeat; ++f) {
        features[f].name = "f" + std::to_string(f + 1);
        for (std::size_t v = 0; v < arity; ++v)
            features[f].values.push_back("v" + std::to_string(v + 1));
    }
    FeatureSpace space(std::move(features));

    SplitRng rng(derive_seed(spec.seed, 0x5E11));
    std::vector<std::vector<double>> coef(nfeat, std::vector<double>(arity));
    for (std::size_t f = 0; f < nfeat; ++f)
        for (std::size_t v = 0; v < arity; ++v)
            coef[f][v] = spec.coefficient_scale * rng.next_normal();

    // Injected subgroup: a random subset of the stated size per feature.
    std::vector<std::vector<std::uint8_t>> injected(nfeat,
                                                    std::vector<std::uint8_t>(arity, 0));
    Subgroup biased_subgroup;
    for (std::size_t f = 0; f < nfeat; ++f) {
        std::vector<std::size_t> idx(arity);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        std::set<std::string> chosen;
        for (int k = 0; k < pattern[f]; ++k) {
            injected[f][idx[static_cast<std::size_t>(k)]] = 1;
            chosen.insert(space.feature(f).values[idx[static_cast<std::size_t>(k)]]);
        }
        if (static_cast<std::size_t>(pattern[f]) < arity)
            biased_subgroup.emplace(space.feature(f).name, std::move(chosen));
    }

    // Rows cycle through cells in lexicographic order so every cell holds
    // floor(n / cells) or ceil(n / cells) rows.
    std::vector<std::vector<std::int32_t>> codes(nfeat, std::vector<std::int32_t>(n));
    std::vector<std::uint8_t> outcomes(n);
    std::vector<double> predictions(n);
    GroundTruth truth;
    truth.biased_subgroup = biased_subgroup;
    truth.biased_cell_count = 1;
    for (int k : pattern) truth.biased_cell_count *= static_cast<std::size_t>(k);

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cell = i % cells;
        double logodds = 0.0;
        bool inside = true;
        std::size_t rem = cell;
        for (std::size_t f = nfeat; f-- > 0;) {
            std::size_t v = rem % arity;
            rem /= arity;
            codes[f][i] = static_cast<std::int32_t>(v);
            logodds += coef[f][v];
            inside = inside && injected[f][v];
        }
        double p_hat = sigmoid(logodds);
        predictions[i] = p_hat;
        double p_true = inside ? sigmoid(logodds + spec.bias_log_odds) : p_hat;
        outcomes[i] = unit_at(spec.seed, 0xA110, i) < p_true ? 1 : 0;
        if (inside) truth.affected_rows.push_back(i);
    }

    return SyntheticData{Dataset(std::move(space), std::move(codes), std::move(outcomes),
                                 std::move(predictions)),
                         std::move(truth)};
}

DetectionScore evaluate_detection(const Subgroup& detected, const GroundTruth& truth,
                                  const FeatureSpace& space) {
    validate_subgroup(detected, space);
    validate_subgroup(truth.biased_subgroup, space);

    DetectionScore score;
    double detected_cells = 1.0;
    double truth_cells = 1.0;
    double intersect_cells = 1.0;
    for (std::size_t f = 0; f < space.feature_count(); ++f) {
        const auto& name = space.feature(f).name;
        const auto& all = space.feature(f).values;
        auto expand = [&](const Subgroup& sg) {
            auto it = sg.find(name);
            if (it == sg.end()) return std::set<std::string>(all.begin(), all.end());
            return it->second;
        };
        std::set<std::string> d = expand(detected);
        std::set<std::string> t = expand(truth.biased_subgroup);
        std::size_t inter = 0;
        for (const auto& v : d) inter += t.count(v);
        detected_cells *= static_cast<double>(d.size());
        truth_cells *= static_cast<double>(t.size());
        intersect_cells *= static_cast<double>(inter);
    }
    if (detected_cells <= 0.0) {
        score.empty_detected = true;
        return score;
    }
    score.recall = truth_cells > 0.0 ? intersect_cells / truth_cells : 0.0;
    score.precision = intersect_cells / detected_cells;
    return score;
}

}  // namespace biasscan
