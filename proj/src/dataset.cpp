#include "biasscan/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace biasscan {

FeatureSpace::FeatureSpace(std::vector<Feature> features) : features_(std::move(features)) {
    std::set<std::string> names;
    for (const auto& f : features_) {
        if (f.values.empty()) throw ConfigError("feature '" + f.name + "' has no values");
        if (!names.insert(f.name).second)
            throw ConfigError("duplicate feature name '" + f.name + "'");
        std::set<std::string> vals(f.values.begin(), f.values.end());
        if (vals.size() != f.values.size())
            throw ConfigError("duplicate value label in feature '" + f.name + "'");
    }
}

std::optional<std::size_t> FeatureSpace::find_feature(const std::string& name) const {
    for (std::size_t i = 0; i < features_.size(); ++i)
        if (features_[i].name == name) return i;
    return std::nullopt;
}

std::optional<std::size_t> FeatureSpace::find_value(std::size_t feature_idx,
                                                    const std::string& label) const {
    const auto& vals = features_[feature_idx].values;
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (vals[i] == label) return i;
    return std::nullopt;
}

Dataset::Dataset(FeatureSpace space, std::vector<std::vector<std::int32_t>> codes_by_feature,
                 std::vector<std::uint8_t> outcomes, std::vector<double> predictions)
    : space_(std::move(space)),
      codes_by_feature_(std::move(codes_by_feature)),
      outcomes_(std::move(outcomes)),
      predictions_(std::move(predictions)) {
    const std::size_t n = outcomes_.size();
    if (n == 0) throw DataError("dataset has no rows");
    if (predictions_.size() != n) throw DataError("outcome/prediction length mismatch");
    if (codes_by_feature_.size() != space_.feature_count())
        throw DataError("feature column count mismatch");
    for (std::size_t f = 0; f < codes_by_feature_.size(); ++f) {
        if (codes_by_feature_[f].size() != n) throw DataError("feature column length mismatch");
        const auto arity = static_cast<std::int32_t>(space_.arity(f));
        for (auto code : codes_by_feature_[f])
            if (code < 0 || code >= arity)
                throw DataError("invalid category code in feature '" + space_.feature(f).name + "'");
    }
    for (auto& p : predictions_) {
        if (!(p >= 0.0 && p <= 1.0) || std::isnan(p))
            throw DataError("prediction outside [0,1]");
        p = clip_prediction(p);
    }
    for (auto y : outcomes_)
        if (y > 1) throw DataError("non-binary outcome");

    // Distinct-prediction coding for aggregation.
    std::vector<double> sorted = predictions_;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    distinct_predictions_ = std::move(sorted);
    prediction_codes_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = std::lower_bound(distinct_predictions_.begin(), distinct_predictions_.end(),
                                   predictions_[i]);
        prediction_codes_[i] =
            static_cast<std::int32_t>(it - distinct_predictions_.begin());
    }
}

namespace {

// RFC4180-ish CSV reader: quoted fields, embedded commas/newlines in quotes.
class CsvReader {
  public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Returns false at EOF. Fields are appended to `out`.
    bool next_record(std::vector<std::string>& out) {
        out.clear();
        int c = in_.get();
        if (c == EOF) return false;
        std::string field;
        bool in_quotes = false;
        for (;;) {
            if (c == EOF) {
                out.push_back(field);
                return true;
            }
            char ch = static_cast<char>(c);
            if (in_quotes) {
                if (ch == '"') {
                    int peek = in_.peek();
                    if (peek == '"') {
                        field.push_back('"');
                        in_.get();
                    } else {
                        in_quotes = false;
                    }
                } else {
                    field.push_back(ch);
                }
            } else if (ch == '"' && field.empty()) {
                in_quotes = true;
            } else if (ch == ',') {
                out.push_back(field);
                field.clear();
            } else if (ch == '\n') {
                out.push_back(field);
                return true;
            } else if (ch == '\r') {
                // swallow; \r\n handled by the following \n
                if (in_.peek() != '\n') {
                    out.push_back(field);
                    return true;
                }
            } else {
                field.push_back(ch);
            }
            c = in_.get();
        }
    }

  private:
    std::istream& in_;
};

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string csv_quote(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace

DiscretizeResult discretize(const std::vector<double>& values, int bin_count) {
    if (values.empty()) throw ConfigError("discretize: empty value list");
    if (bin_count < 2) throw ConfigError("discretize: bin_count must be >= 2");

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    DiscretizeResult result;
    if (sorted.front() == sorted.back()) {
        result.degenerate = true;
        result.labels.assign(values.size(), "[" + format_number(sorted.front()) + "]");
        return result;
    }

    // Upper-inclusive quantile boundaries; duplicates merge.
    std::vector<double> bounds;
    for (int k = 1; k < bin_count; ++k) {
        std::size_t idx = n * static_cast<std::size_t>(k) / static_cast<std::size_t>(bin_count);
        if (idx == 0) continue;
        double b = sorted[idx - 1];
        if (b >= sorted.back()) continue;  // would create an empty top bin
        if (bounds.empty() || b > bounds.back()) bounds.push_back(b);
    }

    auto label_for = [&](double v) {
        // first boundary >= v: a value equal to a boundary stays in that bin (ties fall low)
        std::size_t bin = static_cast<std::size_t>(
            std::lower_bound(bounds.begin(), bounds.end(), v) - bounds.begin());
        std::string lo = bin == 0 ? "-inf" : format_number(bounds[bin - 1]);
        std::string hi = bin == bounds.size() ? "+inf" : format_number(bounds[bin]);
        return "(" + lo + "," + hi + "]";
    };

    result.labels.reserve(values.size());
    for (double v : values) result.labels.push_back(label_for(v));
    return result;
}

Dataset ingest_csv(const std::string& path, const IngestConfig& config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open input file '" + path + "'");
    if (config.features.empty()) throw ConfigError("no feature columns configured");

    CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next_record(header)) throw DataError("empty CSV file");

    auto column_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ConfigError("column '" + name + "' not found in '" + path + "'");
    };

    const std::size_t outcome_idx = column_index(config.outcome_column);
    const std::size_t pred_idx = column_index(config.prediction_column);
    std::vector<std::size_t> feature_idx;
    for (const auto& fc : config.features) feature_idx.push_back(column_index(fc.name));

    std::vector<std::uint8_t> outcomes;
    std::vector<double> predictions;
    std::vector<std::vector<std::string>> raw_features(config.features.size());

    std::vector<std::string> record;
    std::size_t row = 1;  // header is row 1
    while (reader.next_record(record)) {
        ++row;
        if (record.size() == 1 && record[0].empty()) continue;  // trailing blank line
        if (record.size() != header.size())
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(record.size()));
        const std::string& ys = record[outcome_idx];
        if (ys == "0") outcomes.push_back(0);
        else if (ys == "1") outcomes.push_back(1);
        else
            throw DataError("row " + std::to_string(row) + ": non-binary outcome '" + ys + "'");
        double p;
        if (!parse_double(record[pred_idx], p) || !(p >= 0.0 && p <= 1.0))
            throw DataError("row " + std::to_string(row) + ": unparseable prediction '" +
                            record[pred_idx] + "'");
        predictions.push_back(clip_prediction(p));
        for (std::size_t f = 0; f < feature_idx.size(); ++f)
            raw_features[f].push_back(record[feature_idx[f]]);
    }
    if (outcomes.empty()) throw DataError("CSV has no data rows");
    const std::size_t n = outcomes.size();

    std::vector<FeatureSpace::Feature> features;
    std::vector<std::vector<std::int32_t>> codes(config.features.size());
    for (std::size_t f = 0; f < config.features.size(); ++f) {
        const auto& fc = config.features[f];
        std::vector<std::string> labels(n);
        if (fc.continuous) {
            std::vector<double> vals;
            std::vector<std::size_t> present;
            for (std::size_t i = 0; i < n; ++i) {
                const std::string& s = raw_features[f][i];
                if (s.empty()) {
                    labels[i] = kMissingLabel;
                    continue;
                }
                double v;
                if (!parse_double(s, v))
                    throw DataError("feature '" + fc.name + "': unparseable numeric value '" + s +
                                    "'");
                vals.push_back(v);
                present.push_back(i);
            }
            if (!vals.empty()) {
                auto disc = discretize(vals, fc.bin_count);
                for (std::size_t j = 0; j < present.size(); ++j)
                    labels[present[j]] = disc.labels[j];
            }
        } else {
            for (std::size_t i = 0; i < n; ++i)
                labels[i] = raw_features[f][i].empty() ? kMissingLabel : raw_features[f][i];
        }
        // Stable label table in first-appearance order.
        std::unordered_map<std::string, std::int32_t> code_of;
        std::vector<std::string> table;
        codes[f].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto it = code_of.find(labels[i]);
            if (it == code_of.end()) {
                std::int32_t c = static_cast<std::int32_t>(table.size());
                code_of.emplace(labels[i], c);
                table.push_back(labels[i]);
                codes[f][i] = c;
            } else {
                codes[f][i] = it->second;
            }
        }
        features.push_back({fc.name, std::move(table)});
    }

    return Dataset(FeatureSpace(std::move(features)), std::move(codes), std::move(outcomes),
                   std::move(predictions));
}

void write_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    const auto& space = dataset.feature_space();
    for (std::size_t f = 0; f < space.feature_count(); ++f)
        out << csv_quote(space.feature(f).name) << ',';
    out << "y,p\n";
    char buf[40];
    for (std::size_t i = 0; i < dataset.row_count(); ++i) {
        for (std::size_t f = 0; f < space.feature_count(); ++f) {
            const auto& label =
                space.feature(f).values[static_cast<std::size_t>(dataset.codes(f)[i])];
            out << csv_quote(label) << ',';
        }
        std::snprintf(buf, sizeof(buf), "%.17g", dataset.predictions()[i]);
        out << int(dataset.outcomes()[i]) << ',' << buf << '\n';
    }
}

void validate_subgroup(const Subgroup& subgroup, const FeatureSpace& space) {
    for (const auto& [name, values] : subgroup) {
        auto f = space.find_feature(name);
        if (!f) throw ConfigError("subgroup references unknown feature '" + name + "'");
        if (values.empty())
            throw ConfigError("subgroup constrains feature '" + name + "' to an empty set");
        for (const auto& v : values)
            if (!space.find_value(*f, v))
                throw ConfigError("subgroup references unknown value '" + v + "' of feature '" +
                                  name + "'");
    }
}

Subgroup normalize_subgroup(const Subgroup& subgroup, const FeatureSpace& space) {
    validate_subgroup(subgroup, space);
    Subgroup out;
    for (const auto& [name, values] : subgroup) {
        auto f = space.find_feature(name);
        if (values.size() < space.arity(*f)) out.emplace(name, values);
    }
    return out;
}

std::vector<std::uint8_t> subgroup_mask(const Dataset& dataset, const Subgroup& subgroup) {
    const auto& space = dataset.feature_space();
    validate_subgroup(subgroup, space);
    const std::size_t n = dataset.row_count();
    std::vector<std::uint8_t> mask(n, 1);
    for (const auto& [name, values] : subgroup) {
        std::size_t f = *space.find_feature(name);
        std::vector<std::uint8_t> allowed(space.arity(f), 0);
        for (const auto& v : values) allowed[*space.find_value(f, v)] = 1;
        const auto& codes = dataset.codes(f);
        for (std::size_t i = 0; i < n; ++i)
            mask[i] &= allowed[static_cast<std::size_t>(codes[i])];
    }
    return mask;
}

SubgroupStats subgroup_stats(const Dataset& dataset, const Subgroup& subgroup) {
    auto mask = subgroup_mask(dataset, subgroup);
    SubgroupStats stats;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        ++stats.n;
        stats.sum_y += dataset.outcomes()[i];
        stats.sum_p += dataset.predictions()[i];
    }
    if (stats.n > 0) {
        stats.observed_rate = static_cast<double>(stats.sum_y) / static_cast<double>(stats.n);
        stats.expected_rate = stats.sum_p / static_cast<double>(stats.n);
    }
    return stats;
}

}  // namespace biasscan
