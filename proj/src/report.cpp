#include "biasscan/report.hpp"

#include <cmath>
#include <cstdio>
#include <optional>

#include "biasscan/rng.hpp"

namespace biasscan {

using nlohmann::ordered_json;

namespace {

ScanDirection parse_direction(const std::string& s) {
    if (s == "under") return ScanDirection::Under;
    if (s == "over") return ScanDirection::Over;
    if (s == "both") return ScanDirection::Both;
    throw ConfigError("unknown direction '" + s + "'");
}

ordered_json stats_to_json(const SubgroupStats& stats) {
    return ordered_json{{"n", stats.n},
                        {"sum_y", stats.sum_y},
                        {"sum_p", stats.sum_p},
                        {"observed_rate", stats.observed_rate},
                        {"expected_rate", stats.expected_rate}};
}

ordered_json significance_to_json(const SignificanceReport& report) {
    return ordered_json{{"observed_score", report.observed_score},
                        {"p_value", report.p_value},
                        {"replicates", report.replicates},
                        {"seed", report.seed},
                        {"null_scores", report.null_scores}};
}

ScanConfig scan_config_for(const AuditConfig& config, ScanDirection direction, double theta) {
    ScanConfig sc;
    sc.direction = direction;
    sc.penalty.theta = theta;
    sc.restarts = config.restarts;
    sc.seed = config.seed;
    sc.max_sweeps = config.max_sweeps;
    return sc;
}

}  // namespace

ordered_json subgroup_to_json(const Subgroup& subgroup) {
    ordered_json j = ordered_json::object();
    for (const auto& [name, values] : subgroup) {
        ordered_json arr = ordered_json::array();
        for (const auto& v : values) arr.push_back(v);
        j[name] = std::move(arr);
    }
    return j;
}

ordered_json scan_result_to_json(const ScanResult& result) {
    ordered_json j;
    j["subgroup"] = subgroup_to_json(result.subgroup);
    j["direction"] = direction_name(result.direction);
    j["score"] = result.detail.score;
    j["penalized_score"] = result.penalized_score;
    if (result.detail.at_limit)
        j["q_star"] = nullptr;  // q at an analytic limit (0 or infinity)
    else
        j["q_star"] = result.detail.q_star;
    j["at_limit"] = result.detail.at_limit;
    j["stats"] = stats_to_json(result.stats);
    j["sweeps_used"] = result.sweeps_used;
    j["restart_index"] = result.restart_index;
    return j;
}

ordered_json audit_config_to_json(const AuditConfig& config) {
    ordered_json features = ordered_json::array();
    for (const auto& f : config.features) {
        ordered_json fj{{"name", f.name}, {"continuous", f.continuous}};
        if (f.continuous) fj["bins"] = f.bin_count;
        features.push_back(std::move(fj));
    }
    ordered_json j;
    j["data"] = config.data_path;
    j["outcome_col"] = config.outcome_column;
    j["pred_col"] = config.prediction_column;
    j["features"] = std::move(features);
    j["direction"] = scan_direction_name(config.direction);
    j["theta"] = config.theta;
    j["restarts"] = config.restarts;
    j["max_sweeps"] = config.max_sweeps;
    j["bootstrap"] = config.bootstrap;
    j["seed"] = config.seed;
    j["error_scan"] = config.error_scan;
    j["classification_threshold"] = config.classification_threshold;
    if (config.theta_sweep) {
        j["theta_sweep"] = ordered_json{
            {"lo", config.sweep_lo}, {"hi", config.sweep_hi}, {"steps", config.sweep_steps}};
    }
    return j;
}

AuditConfig audit_config_from_json(const nlohmann::json& j) {
    const nlohmann::json& c = j.contains("config") ? j.at("config") : j;
    AuditConfig config;
    config.data_path = c.at("data").get<std::string>();
    config.outcome_column = c.at("outcome_col").get<std::string>();
    config.prediction_column = c.at("pred_col").get<std::string>();
    for (const auto& fj : c.at("features")) {
        FeatureConfig fc;
        fc.name = fj.at("name").get<std::string>();
        fc.continuous = fj.value("continuous", false);
        fc.bin_count = fj.value("bins", 5);
        config.features.push_back(std::move(fc));
    }
    config.direction = parse_direction(c.at("direction").get<std::string>());
    config.theta = c.value("theta", 0.0);
    config.restarts = c.value("restarts", 50);
    config.max_sweeps = c.value("max_sweeps", 100);
    config.bootstrap = c.value("bootstrap", 99);
    config.seed = c.value("seed", std::uint64_t{0});
    config.error_scan = c.value("error_scan", false);
    config.classification_threshold = c.value("classification_threshold", 0.5);
    if (c.contains("theta_sweep")) {
        config.theta_sweep = true;
        config.sweep_lo = c.at("theta_sweep").at("lo").get<double>();
        config.sweep_hi = c.at("theta_sweep").at("hi").get<double>();
        config.sweep_steps = c.at("theta_sweep").at("steps").get<int>();
    }
    return config;
}

ordered_json audit_dataset(const Dataset& dataset, const AuditConfig& config, int jobs) {
    const Dataset* target = &dataset;
    std::optional<Dataset> transformed;
    if (config.error_scan) {
        transformed = error_transform(dataset, config.classification_threshold);
        target = &*transformed;
    }

    ordered_json report;
    report["tool"] = ordered_json{{"name", kToolName}, {"version", kToolVersion}};
    report["config"] = audit_config_to_json(config);

    ordered_json features = ordered_json::array();
    const auto& space = target->feature_space();
    for (std::size_t f = 0; f < space.feature_count(); ++f) {
        features.push_back(ordered_json{{"name", space.feature(f).name},
                                        {"arity", space.arity(f)},
                                        {"values", space.feature(f).values}});
    }
    report["dataset"] = ordered_json{{"n", target->row_count()}, {"features", std::move(features)}};

    // Per-direction scans; "both" reports each side plus the winner.
    ordered_json scans = ordered_json::object();
    std::optional<ScanResult> under, over;
    if (config.direction != ScanDirection::Over) {
        under = mdss_scan(*target, scan_config_for(config, ScanDirection::Under, config.theta),
                          jobs);
        scans["under"] = scan_result_to_json(*under);
    }
    if (config.direction != ScanDirection::Under) {
        over = mdss_scan(*target, scan_config_for(config, ScanDirection::Over, config.theta),
                         jobs);
        scans["over"] = scan_result_to_json(*over);
    }
    const ScanResult* best = nullptr;
    if (under && over)
        best = over->penalized_score > under->penalized_score ? &*over : &*under;
    else
        best = under ? &*under : &*over;
    report["scans"] = std::move(scans);
    report["best"] = scan_result_to_json(*best);

    if (config.bootstrap > 0) {
        auto sig = parametric_bootstrap(
            *target, scan_config_for(config, config.direction, config.theta), config.bootstrap,
            config.seed, jobs, best);
        report["significance"] = significance_to_json(sig);
    }

    if (config.theta_sweep) {
        ordered_json sweep = ordered_json::array();
        for (int s = 0; s < config.sweep_steps; ++s) {
            double theta =
                config.sweep_steps == 1
                    ? config.sweep_lo
                    : config.sweep_lo + (config.sweep_hi - config.sweep_lo) * s /
                                            (config.sweep_steps - 1);
            auto r = mdss_scan(*target, scan_config_for(config, config.direction, theta), jobs);
            sweep.push_back(ordered_json{{"theta", theta},
                                         {"score", r.detail.score},
                                         {"penalized_score", r.penalized_score},
                                         {"constrained_features", r.subgroup.size()},
                                         {"subgroup", subgroup_to_json(r.subgroup)}});
        }
        report["theta_sweep"] = std::move(sweep);
    }
    return report;
}

ordered_json run_audit(const AuditConfig& config, int jobs) {
    IngestConfig ingest;
    ingest.outcome_column = config.outcome_column;
    ingest.prediction_column = config.prediction_column;
    ingest.features = config.features;
    Dataset dataset = ingest_csv(config.data_path, ingest);
    return audit_dataset(dataset, config, jobs);
}

ordered_json run_experiment(const ExperimentConfig& config, int jobs) {
    if (config.repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (config.patterns.empty()) throw ConfigError("at least one injection pattern required");

    ordered_json rows = ordered_json::array();
    for (std::size_t pi = 0; pi < config.patterns.size(); ++pi) {
        const auto& pattern = config.patterns[pi];
        std::vector<double> recalls, precisions;
        int detections = 0;
        for (int rep = 0; rep < config.repetitions; ++rep) {
            SyntheticSpec spec;
            spec.feature_count = config.feature_count;
            spec.arity = config.arity;
            spec.coefficient_scale = config.coefficient_scale;
            spec.injection_pattern = pattern;
            spec.bias_log_odds = config.bias_log_odds;
            spec.affected_count = config.affected_count;
            spec.seed = derive_seed(config.seed, pi, static_cast<std::uint64_t>(rep));
            auto data = generate_synthetic(spec);

            ScanConfig sc;
            sc.direction = config.direction;
            sc.penalty.theta = config.theta;
            sc.restarts = config.restarts;
            sc.seed = spec.seed;
            sc.max_sweeps = config.max_sweeps;
            auto result = mdss_scan(data.dataset, sc, jobs);

            auto det = evaluate_detection(result.subgroup, data.truth,
                                          data.dataset.feature_space());
            recalls.push_back(det.recall);
            precisions.push_back(det.precision);

            if (config.bootstrap > 0) {
                auto sig = parametric_bootstrap(data.dataset, sc, config.bootstrap, spec.seed,
                                                jobs, &result);
                if (sig.p_value <= config.alpha) ++detections;
            }
        }

        auto mean_ci = [&](const std::vector<double>& xs) {
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            var /= std::max<double>(1.0, static_cast<double>(xs.size() - 1));
            double half = 1.96 * std::sqrt(var / static_cast<double>(xs.size()));
            return std::pair<double, double>(mean, half);
        };
        auto [rmean, rci] = mean_ci(recalls);
        auto [pmean, pci] = mean_ci(precisions);

        std::string pattern_name;
        for (std::size_t k = 0; k < pattern.size(); ++k)
            pattern_name += (k ? "x" : "") + std::to_string(pattern[k]);

        ordered_json row;
        row["pattern"] = pattern_name;
        row["repetitions"] = config.repetitions;
        row["mean_recall"] = rmean;
        row["recall_ci95"] = rci;
        row["mean_precision"] = pmean;
        row["precision_ci95"] = pci;
        if (config.bootstrap > 0)
            row["detection_rate"] =
                static_cast<double>(detections) / static_cast<double>(config.repetitions);
        else
            row["detection_rate"] = nullptr;
        rows.push_back(std::move(row));
    }

    ordered_json report;
    report["tool"] = ordered_json{{"name", kToolName}, {"version", kToolVersion}};
    report["config"] = ordered_json{{"repetitions", config.repetitions},
                                    {"feature_count", config.feature_count},
                                    {"arity", config.arity},
                                    {"bias_log_odds", config.bias_log_odds},
                                    {"affected_count", config.affected_count},
                                    {"coefficient_scale", config.coefficient_scale},
                                    {"direction", scan_direction_name(config.direction)},
                                    {"theta", config.theta},
                                    {"restarts", config.restarts},
                                    {"max_sweeps", config.max_sweeps},
                                    {"bootstrap", config.bootstrap},
                                    {"alpha", config.alpha},
                                    {"seed", config.seed}};
    report["results"] = std::move(rows);
    return report;
}

std::string experiment_to_csv(const ordered_json& report) {
    std::string out =
        "pattern,repetitions,mean_recall,recall_ci95,mean_precision,precision_ci95,"
        "detection_rate\n";
    for (const auto& row : report.at("results")) {
        out += row.at("pattern").get<std::string>();
        out += ',' + std::to_string(row.at("repetitions").get<int>());
        char buf[32];
        for (const char* key : {"mean_recall", "recall_ci95", "mean_precision",
                                "precision_ci95"}) {
            std::snprintf(buf, sizeof(buf), ",%.6g", row.at(key).get<double>());
            out += buf;
        }
        if (row.at("detection_rate").is_null()) {
            out += ",";
        } else {
            std::snprintf(buf, sizeof(buf), ",%.6g", row.at("detection_rate").get<double>());
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace biasscan
