#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace biasscan {

// Clipping bound applied to every prediction at ingestion.
inline constexpr double kPredictionEps = 1e-6;

inline double clip_prediction(double p) {
    if (p < kPredictionEps) return kPredictionEps;
    if (p > 1.0 - kPredictionEps) return 1.0 - kPredictionEps;
    return p;
}

// Bad configuration (missing column, invalid flag combination). CLI exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Bad data contents (non-binary outcome, unparseable prediction). CLI exit code 3.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline const std::string kMissingLabel = "__missing__";

// Ordered categorical feature definitions. Immutable after construction.
class FeatureSpace {
  public:
    struct Feature {
        std::string name;
        std::vector<std::string> values;  // label per integer code
    };

    FeatureSpace() = default;
    explicit FeatureSpace(std::vector<Feature> features);

    std::size_t feature_count() const { return features_.size(); }
    const Feature& feature(std::size_t idx) const { return features_[idx]; }
    const std::vector<Feature>& features() const { return features_; }
    std::size_t arity(std::size_t idx) const { return features_[idx].values.size(); }

    // Index lookup by name; nullopt if unknown.
    std::optional<std::size_t> find_feature(const std::string& name) const;
    std::optional<std::size_t> find_value(std::size_t feature_idx, const std::string& label) const;

  private:
    std::vector<Feature> features_;
};

// Axis-aligned subgroup: feature name -> non-empty set of value labels.
// An absent feature is unconstrained; the empty map is the all-data subgroup.
using Subgroup = std::map<std::string, std::set<std::string>>;

struct SubgroupStats {
    std::size_t n = 0;
    std::size_t sum_y = 0;
    double sum_p = 0.0;
    double observed_rate = 0.0;
    double expected_rate = 0.0;
};

// Immutable table of categorical features, binary outcomes and predictions.
class Dataset {
  public:
    Dataset(FeatureSpace space, std::vector<std::vector<std::int32_t>> codes_by_feature,
            std::vector<std::uint8_t> outcomes, std::vector<double> predictions);

    const FeatureSpace& feature_space() const { return space_; }
    std::size_t row_count() const { return outcomes_.size(); }
    const std::vector<std::int32_t>& codes(std::size_t feature_idx) const {
        return codes_by_feature_[feature_idx];
    }
    const std::vector<std::uint8_t>& outcomes() const { return outcomes_; }
    const std::vector<double>& predictions() const { return predictions_; }

    // Distinct clipped predictions; codes index into this table.
    const std::vector<double>& distinct_predictions() const { return distinct_predictions_; }
    const std::vector<std::int32_t>& prediction_codes() const { return prediction_codes_; }

  private:
    FeatureSpace space_;
    std::vector<std::vector<std::int32_t>> codes_by_feature_;
    std::vector<std::uint8_t> outcomes_;
    std::vector<double> predictions_;
    std::vector<double> distinct_predictions_;
    std::vector<std::int32_t> prediction_codes_;
};

struct FeatureConfig {
    std::string name;
    bool continuous = false;
    int bin_count = 5;
};

struct IngestConfig {
    std::string outcome_column;
    std::string prediction_column;
    std::vector<FeatureConfig> features;
};

struct DiscretizeResult {
    std::vector<std::string> labels;  // one label per input value
    bool degenerate = false;          // all values identical
};

// Quantile binning; ties at a boundary fall to the lower bin.
DiscretizeResult discretize(const std::vector<double>& values, int bin_count);

Dataset ingest_csv(const std::string& path, const IngestConfig& config);

// Writes a dataset in the same format ingest_csv reads (features..., y, p).
void write_csv(const Dataset& dataset, const std::string& path);

// Validates the subgroup against the feature space; throws ConfigError on
// unknown features/values or empty value sets.
void validate_subgroup(const Subgroup& subgroup, const FeatureSpace& space);

// Drops constraints covering a feature's full value set.
Subgroup normalize_subgroup(const Subgroup& subgroup, const FeatureSpace& space);

SubgroupStats subgroup_stats(const Dataset& dataset, const Subgroup& subgroup);

// Row membership mask for a subgroup (internal building block, also used by tests).
std::vector<std::uint8_t> subgroup_mask(const Dataset& dataset, const Subgroup& subgroup);

}  // namespace biasscan
