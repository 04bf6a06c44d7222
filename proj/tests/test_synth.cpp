#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <map>

#include "biasscan/scan.hpp"
#include "biasscan/synth.hpp"

using namespace biasscan;

TEST_CASE("row count derives from pattern coverage") {
    SyntheticSpec spec;
    spec.injection_pattern = {2, 2, 2, 6};  // coverage (2/6)^3 = 1/27
    spec.seed = 1;
    auto data = generate_synthetic(spec);
    CHECK(data.dataset.row_count() == 2700);
    CHECK(data.truth.biased_cell_count == 48);
    // Injection hits roughly the configured number of observations: each of
    // the 48 biased cells holds floor or ceil of 2700/1296 rows.
    CHECK(data.truth.affected_rows.size() >= 96);
    CHECK(data.truth.affected_rows.size() <= 144);
}

TEST_CASE("rows are spread evenly over all cells") {
    SyntheticSpec spec;
    spec.injection_pattern = {2, 6, 6, 6};
    spec.row_count_override = 2600;  // 1296 cells: 8 get 3 rows, the rest 2
    spec.seed = 2;
    auto data = generate_synthetic(spec);
    const auto& ds = data.dataset;
    std::map<std::vector<std::int32_t>, std::size_t> cell_counts;
    for (std::size_t i = 0; i < ds.row_count(); ++i) {
        std::vector<std::int32_t> cell(4);
        for (std::size_t f = 0; f < 4; ++f) cell[f] = ds.codes(f)[i];
        cell_counts[cell]++;
    }
    std::size_t lo = ds.row_count(), hi = 0;
    for (const auto& [cell, c] : cell_counts) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    CHECK(hi - lo <= 1);
    CHECK(cell_counts.size() == 1296);
}

TEST_CASE("exactly the rows inside the injected subgroup are affected") {
    SyntheticSpec spec;
    spec.injection_pattern = {2, 2, 6, 6};
    spec.seed = 3;
    auto data = generate_synthetic(spec);
    auto mask = subgroup_mask(data.dataset, data.truth.biased_subgroup);
    std::size_t inside = 0;
    for (auto m : mask) inside += m;
    CHECK(inside == data.truth.affected_rows.size());
    for (auto r : data.truth.affected_rows) CHECK(mask[r] == 1);
}

TEST_CASE("generator is calibrated when bias is zero") {
    SyntheticSpec spec;
    spec.bias_log_odds = 0.0;
    spec.row_count_override = 60000;
    spec.feature_count = 2;
    spec.arity = 3;
    spec.injection_pattern = {1, 1};
    spec.seed = 4;
    auto data = generate_synthetic(spec);
    const auto& ds = data.dataset;
    // Per-cell observed rate vs mean prediction, 3 standard errors.
    std::map<std::pair<std::int32_t, std::int32_t>, std::array<double, 3>> cells;
    for (std::size_t i = 0; i < ds.row_count(); ++i) {
        auto& acc = cells[{ds.codes(0)[i], ds.codes(1)[i]}];
        acc[0] += 1.0;
        acc[1] += ds.outcomes()[i];
        acc[2] += ds.predictions()[i];
    }
    for (const auto& [cell, acc] : cells) {
        double n = acc[0];
        double obs = acc[1] / n;
        double exp = acc[2] / n;
        double se = std::sqrt(exp * (1 - exp) / n);
        CHECK(std::abs(obs - exp) <= 3.0 * se);
    }
}

TEST_CASE("generator determinism and spec validation") {
    SyntheticSpec spec;
    spec.injection_pattern = {2, 2, 2, 6};
    spec.seed = 5;
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    CHECK(a.dataset.outcomes() == b.dataset.outcomes());
    CHECK(a.dataset.predictions() == b.dataset.predictions());
    CHECK(a.truth.biased_subgroup == b.truth.biased_subgroup);

    SyntheticSpec bad = spec;
    bad.injection_pattern = {7, 2, 2, 6};
    CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);
    bad.injection_pattern = {2, 2, 6};
    CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);
}

TEST_CASE("evaluate_detection cell arithmetic") {
    SyntheticSpec spec;
    spec.injection_pattern = {2, 2, 2, 6};
    spec.seed = 6;
    auto data = generate_synthetic(spec);
    const auto& space = data.dataset.feature_space();

    SUBCASE("detected equals truth") {
        auto s = evaluate_detection(data.truth.biased_subgroup, data.truth, space);
        CHECK(s.recall == doctest::Approx(1.0));
        CHECK(s.precision == doctest::Approx(1.0));
    }
    SUBCASE("detecting everything has full recall, coverage precision") {
        auto s = evaluate_detection({}, data.truth, space);
        CHECK(s.recall == doctest::Approx(1.0));
        CHECK(s.precision == doctest::Approx(48.0 / 1296.0));
    }
    SUBCASE("partial overlap counts cells") {
        // Shrink one constrained feature of the truth to a single value:
        // 24 of the 48 biased cells remain.
        Subgroup partial = data.truth.biased_subgroup;
        auto it = partial.begin();
        it->second.erase(it->second.begin());
        auto s = evaluate_detection(partial, data.truth, space);
        CHECK(s.recall == doctest::Approx(0.5));
        CHECK(s.precision == doctest::Approx(1.0));
    }
}

TEST_CASE("scan recovers a strongly injected subgroup") {
    SyntheticSpec spec;
    spec.injection_pattern = {2, 2, 2, 6};
    spec.bias_log_odds = 3.0;
    spec.affected_count = 200;
    spec.seed = 7;
    auto data = generate_synthetic(spec);
    ScanConfig config;
    config.direction = ScanDirection::Under;
    config.restarts = 30;
    config.seed = 7;
    auto result = mdss_scan(data.dataset, config);
    auto s = evaluate_detection(result.subgroup, data.truth, data.dataset.feature_space());
    CHECK(s.recall >= 0.5);
    CHECK(s.precision >= 0.5);
}
