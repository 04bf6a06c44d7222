#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <map>

#include "biasscan/dataset.hpp"
#include "biasscan/rng.hpp"
#include "biasscan/synth.hpp"
#include "oracles.hpp"

using namespace biasscan;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& content) {
        static int counter = 0;
        path = "biasscan_test_" + std::to_string(counter++) + ".csv";
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

IngestConfig basic_config() {
    IngestConfig config;
    config.outcome_column = "y";
    config.prediction_column = "p";
    config.features = {{"age", false, 5}};
    return config;
}

}  // namespace

TEST_CASE("ingest_csv parses a small file") {
    TempFile file("age,y,p\nyoung,1,0.3\nold,0,0.7\nyoung,1,0.5\n");
    Dataset ds = ingest_csv(file.path, basic_config());
    CHECK(ds.row_count() == 3);
    CHECK(ds.feature_space().feature_count() == 1);
    CHECK(ds.feature_space().arity(0) == 2);
    CHECK(ds.outcomes()[0] == 1);
    CHECK(ds.predictions()[1] == doctest::Approx(0.7));
}

TEST_CASE("ingest_csv clips predictions into (0,1)") {
    TempFile file("age,y,p\na,1,1.0\nb,0,0.0\n");
    Dataset ds = ingest_csv(file.path, basic_config());
    CHECK(ds.predictions()[0] == doctest::Approx(0.999999));
    CHECK(ds.predictions()[1] == doctest::Approx(1e-6));
}

TEST_CASE("ingest_csv error reporting") {
    SUBCASE("missing column names the column") {
        TempFile file("age,y,p\na,1,0.5\n");
        IngestConfig config = basic_config();
        config.prediction_column = "score";
        CHECK_THROWS_WITH_AS(ingest_csv(file.path, config),
                             doctest::Contains("score"), ConfigError);
    }
    SUBCASE("non-binary outcome carries the row number") {
        TempFile file("age,y,p\na,1,0.5\nb,2,0.5\n");
        CHECK_THROWS_WITH_AS(ingest_csv(file.path, basic_config()),
                             doctest::Contains("row 3"), DataError);
    }
    SUBCASE("unparseable prediction carries the row number") {
        TempFile file("age,y,p\na,1,0.5\nb,0,high\n");
        CHECK_THROWS_WITH_AS(ingest_csv(file.path, basic_config()),
                             doctest::Contains("row 3"), DataError);
    }
}

TEST_CASE("ingest_csv maps empty fields to the missing category") {
    TempFile file("age,y,p\na,1,0.5\n,0,0.5\n");
    Dataset ds = ingest_csv(file.path, basic_config());
    const auto& values = ds.feature_space().feature(0).values;
    CHECK(std::count(values.begin(), values.end(), kMissingLabel) == 1);
}

TEST_CASE("ingest_csv handles quoted fields") {
    TempFile file("age,y,p\n\"a,b\",1,0.5\nplain,0,0.5\n");
    Dataset ds = ingest_csv(file.path, basic_config());
    CHECK(ds.feature_space().feature(0).values[0] == "a,b");
}

TEST_CASE("discretize median split") {
    auto r = discretize({1, 2, 3, 4}, 2);
    CHECK_FALSE(r.degenerate);
    CHECK(r.labels[0] == r.labels[1]);
    CHECK(r.labels[2] == r.labels[3]);
    CHECK(r.labels[0] != r.labels[2]);
}

TEST_CASE("discretize degenerate input collapses to one flagged category") {
    auto r = discretize(std::vector<double>(7, 7.0), 5);
    CHECK(r.degenerate);
    for (const auto& l : r.labels) CHECK(l == r.labels[0]);
}

TEST_CASE("discretize quantile bins match a direct quantile computation") {
    std::vector<double> values;
    for (int i = 0; i < 100; ++i) values.push_back(i);
    auto r = discretize(values, 5);
    // Direct oracle: with n=100 and 5 bins, the bin of value v is v / 20.
    std::map<std::string, int> counts;
    for (int i = 0; i < 100; ++i) {
        counts[r.labels[static_cast<std::size_t>(i)]]++;
        CHECK(r.labels[static_cast<std::size_t>(i)] ==
              r.labels[static_cast<std::size_t>((i / 20) * 20)]);
    }
    CHECK(counts.size() == 5);
    for (const auto& [label, c] : counts) CHECK(c == 20);
}

TEST_CASE("discretize ties at a boundary fall to the lower bin") {
    auto r = discretize({1, 2, 3, 4}, 2);
    // 2 is the boundary; it must share a bin with 1, not with 3.
    CHECK(r.labels[1] == r.labels[0]);
}

TEST_CASE("subgroup_stats basics") {
    std::vector<FeatureSpace::Feature> features{{"f1", {"a", "b"}}};
    Dataset ds(FeatureSpace(features), {{0, 1, 0, 1, 1}}, {1, 0, 1, 0, 0},
               {0.5, 0.5, 0.5, 0.5, 0.5});

    SUBCASE("unconstrained subgroup covers all rows") {
        auto stats = subgroup_stats(ds, {});
        CHECK(stats.n == 5);
    }
    SUBCASE("single-value constraint counts matching rows") {
        auto stats = subgroup_stats(ds, {{"f1", {"a"}}});
        CHECK(stats.n == 2);
        CHECK(stats.sum_y == 2);
    }
}

TEST_CASE("subgroup_stats rates") {
    std::vector<FeatureSpace::Feature> features{{"f1", {"a"}}};
    Dataset ds(FeatureSpace(features), {{0, 0, 0}}, {1, 0, 1}, {0.5, 0.5, 0.5});
    auto stats = subgroup_stats(ds, {});
    CHECK(stats.observed_rate == doctest::Approx(2.0 / 3.0));
    CHECK(stats.expected_rate == doctest::Approx(0.5));
}

TEST_CASE("subgroup invariants on random fixtures") {
    SplitRng rng(42);
    Dataset ds = oracles::random_dataset(rng, 200, 3, 4);
    const auto& space = ds.feature_space();

    SUBCASE("full-set constraint normalizes away") {
        Subgroup full{{"f1", {"v1", "v2", "v3", "v4"}}};
        auto a = subgroup_stats(ds, full);
        auto b = subgroup_stats(ds, {});
        CHECK(a.n == b.n);
        CHECK(a.sum_y == b.sum_y);
        CHECK(a.sum_p == doctest::Approx(b.sum_p));
        CHECK(normalize_subgroup(full, space).empty());
    }

    SUBCASE("partition property over one feature") {
        auto whole = subgroup_stats(ds, {});
        std::size_t n = 0, sum_y = 0;
        double sum_p = 0.0;
        for (const auto& v : space.feature(1).values) {
            auto part = subgroup_stats(ds, {{"f2", {v}}});
            n += part.n;
            sum_y += part.sum_y;
            sum_p += part.sum_p;
        }
        CHECK(n == whole.n);
        CHECK(sum_y == whole.sum_y);
        CHECK(sum_p == doctest::Approx(whole.sum_p));
    }

    SUBCASE("row order invariance") {
        Subgroup sg{{"f1", {"v1", "v3"}}, {"f3", {"v2"}}};
        auto before = subgroup_stats(ds, sg);
        // Rebuild with rows reversed.
        std::size_t n = ds.row_count();
        std::vector<std::vector<std::int32_t>> codes(3, std::vector<std::int32_t>(n));
        std::vector<std::uint8_t> y(n);
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < 3; ++f) codes[f][i] = ds.codes(f)[n - 1 - i];
            y[i] = ds.outcomes()[n - 1 - i];
            p[i] = ds.predictions()[n - 1 - i];
        }
        Dataset reversed(space, std::move(codes), std::move(y), std::move(p));
        auto after = subgroup_stats(reversed, sg);
        CHECK(before.n == after.n);
        CHECK(before.sum_y == after.sum_y);
        CHECK(before.sum_p == doctest::Approx(after.sum_p));
    }
}

TEST_CASE("subgroup validation") {
    std::vector<FeatureSpace::Feature> features{{"f1", {"a", "b"}}};
    FeatureSpace space(features);
    CHECK_THROWS_AS(validate_subgroup({{"nope", {"a"}}}, space), ConfigError);
    CHECK_THROWS_AS(validate_subgroup({{"f1", {"z"}}}, space), ConfigError);
    CHECK_THROWS_AS(validate_subgroup({{"f1", {}}}, space), ConfigError);
}

TEST_CASE("CSV round trip preserves the dataset") {
    SyntheticSpec spec;
    spec.injection_pattern = {2, 2, 2, 6};
    spec.seed = 11;
    auto data = generate_synthetic(spec);
    TempFile file("");
    write_csv(data.dataset, file.path);

    IngestConfig config;
    config.outcome_column = "y";
    config.prediction_column = "p";
    for (const auto& f : data.dataset.feature_space().features())
        config.features.push_back({f.name, false, 5});
    Dataset back = ingest_csv(file.path, config);

    REQUIRE(back.row_count() == data.dataset.row_count());
    for (std::size_t i = 0; i < back.row_count(); ++i) {
        CHECK(back.outcomes()[i] == data.dataset.outcomes()[i]);
        CHECK(back.predictions()[i] == data.dataset.predictions()[i]);
    }
    auto a = subgroup_stats(data.dataset, data.truth.biased_subgroup);
    auto b = subgroup_stats(back, data.truth.biased_subgroup);
    CHECK(a.n == b.n);
    CHECK(a.sum_y == b.sum_y);
}
