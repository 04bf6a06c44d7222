// Command-line front end: audit a predictions file, run the synthetic
// experiment suite, or emit a synthetic dataset as CSV.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "biasscan/report.hpp"

namespace {

using biasscan::AuditConfig;
using biasscan::ConfigError;
using biasscan::DataError;
using biasscan::ScanDirection;

ScanDirection parse_direction_flag(const std::string& s) {
    if (s == "under") return ScanDirection::Under;
    if (s == "over") return ScanDirection::Over;
    if (s == "both") return ScanDirection::Both;
    throw ConfigError("--direction must be one of under|over|both");
}

// "age:cont:5" marks a continuous feature binned into 5 quantiles.
biasscan::FeatureConfig parse_feature_spec(const std::string& spec) {
    biasscan::FeatureConfig fc;
    auto first = spec.find(':');
    if (first == std::string::npos) {
        fc.name = spec;
        return fc;
    }
    fc.name = spec.substr(0, first);
    std::string rest = spec.substr(first + 1);
    if (rest.rfind("cont", 0) != 0)
        throw ConfigError("bad feature spec '" + spec + "' (expected name or name:cont:<bins>)");
    fc.continuous = true;
    auto second = rest.find(':');
    if (second != std::string::npos) {
        try {
            fc.bin_count = std::stoi(rest.substr(second + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad bin count in feature spec '" + spec + "'");
        }
        if (fc.bin_count < 2) throw ConfigError("bin count must be >= 2 in '" + spec + "'");
    }
    return fc;
}

std::vector<int> parse_pattern(const std::string& s) {
    std::vector<int> pattern;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            pattern.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ConfigError("bad pattern '" + s + "' (expected comma-separated integers)");
        }
    }
    if (pattern.empty()) throw ConfigError("empty pattern");
    return pattern;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        if (!content.empty() && content.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << content;
}

void print_audit_summary(const nlohmann::ordered_json& report) {
    const auto& best = report.at("best");
    std::cerr << "detected (" << best.at("direction").get<std::string>()
              << "): score=" << best.at("score").get<double>()
              << " penalized=" << best.at("penalized_score").get<double>() << " n="
              << best.at("stats").at("n").get<std::size_t>()
              << " observed=" << best.at("stats").at("observed_rate").get<double>()
              << " expected=" << best.at("stats").at("expected_rate").get<double>() << '\n'
              << "subgroup: " << best.at("subgroup").dump() << '\n';
    if (report.contains("significance"))
        std::cerr << "p_value=" << report.at("significance").at("p_value").get<double>()
                  << " (B=" << report.at("significance").at("replicates").get<int>() << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive bias subgroup scan"};
    app.require_subcommand(1);
    int jobs = 1;
    app.add_option("--jobs", jobs, "worker thread cap (does not affect results)");

    // audit
    auto* audit = app.add_subcommand("audit", "scan a predictions CSV for a biased subgroup");
    std::string data_path, outcome_col = "y", pred_col = "p", features_flag, direction = "both";
    std::string out_path, config_path, theta_sweep_flag;
    AuditConfig ac;
    bool quiet = false;
    audit->add_option("--data", data_path, "input CSV");
    audit->add_option("--config", config_path, "JSON config or previous report to re-run");
    audit->add_option("--outcome-col", outcome_col, "outcome column (0/1)");
    audit->add_option("--pred-col", pred_col, "prediction column in [0,1]");
    audit->add_option("--features", features_flag,
                      "comma list; ':cont:<bins>' suffix for continuous columns");
    audit->add_option("--direction", direction, "under|over|both");
    audit->add_option("--theta", ac.theta, "complexity penalty per extra value");
    audit->add_option("--restarts", ac.restarts, "random restarts per scan");
    audit->add_option("--max-sweeps", ac.max_sweeps, "sweep cap per restart");
    audit->add_option("--bootstrap", ac.bootstrap, "bootstrap replicates (0 disables)");
    audit->add_option("--seed", ac.seed, "random seed");
    audit->add_flag("--error-scan", ac.error_scan, "scan for excess classification error");
    audit->add_option("--threshold", ac.classification_threshold,
                      "classification threshold for --error-scan");
    audit->add_option("--theta-sweep", theta_sweep_flag, "lo:hi:steps penalty sweep");
    audit->add_option("--out", out_path, "report path (default stdout)");
    audit->add_flag("--quiet", quiet, "suppress the text summary");

    // experiment
    auto* experiment =
        app.add_subcommand("experiment", "injected-bias detection benchmark on synthetic data");
    biasscan::ExperimentConfig ec;
    std::vector<std::string> pattern_flags;
    std::string exp_direction = "both", exp_out, exp_format = "json";
    experiment->add_option("--pattern", pattern_flags, "injection pattern, e.g. 2,2,2,6")
        ->required();
    experiment->add_option("--reps", ec.repetitions, "repetitions per pattern");
    experiment->add_option("--features", ec.feature_count, "feature count");
    experiment->add_option("--arity", ec.arity, "values per feature");
    experiment->add_option("--bias", ec.bias_log_odds, "injected log-odds bias");
    experiment->add_option("--affected", ec.affected_count, "target affected observations");
    experiment->add_option("--scale", ec.coefficient_scale, "coefficient scale");
    experiment->add_option("--direction", exp_direction, "under|over|both");
    experiment->add_option("--theta", ec.theta, "complexity penalty per extra value");
    experiment->add_option("--restarts", ec.restarts, "random restarts per scan");
    experiment->add_option("--bootstrap", ec.bootstrap,
                           "bootstrap replicates for detection rate (0 skips)");
    experiment->add_option("--alpha", ec.alpha, "significance level for detection");
    experiment->add_option("--seed", ec.seed, "random seed");
    experiment->add_option("--format", exp_format, "json|csv");
    experiment->add_option("--out", exp_out, "output path (default stdout)");

    // synth
    auto* synth = app.add_subcommand("synth", "write a synthetic dataset as CSV");
    biasscan::SyntheticSpec sp;
    std::string synth_pattern = "2,2,2,6", synth_out, truth_out;
    synth->add_option("--pattern", synth_pattern, "injection pattern, e.g. 2,2,2,6");
    synth->add_option("--features", sp.feature_count, "feature count");
    synth->add_option("--arity", sp.arity, "values per feature");
    synth->add_option("--bias", sp.bias_log_odds, "injected log-odds bias (0 for null data)");
    synth->add_option("--affected", sp.affected_count, "target affected observations");
    synth->add_option("--scale", sp.coefficient_scale, "coefficient scale");
    synth->add_option("--rows", sp.row_count_override, "explicit row count override");
    synth->add_option("--seed", sp.seed, "random seed");
    synth->add_option("--out", synth_out, "CSV path")->required();
    synth->add_option("--truth-out", truth_out, "ground-truth JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (audit->parsed()) {
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
                nlohmann::json j = nlohmann::json::parse(in);
                ac = biasscan::audit_config_from_json(j);
            }
            if (!data_path.empty()) ac.data_path = data_path;
            if (audit->count("--outcome-col") || ac.outcome_column.empty())
                ac.outcome_column = outcome_col;
            if (audit->count("--pred-col") || ac.prediction_column.empty())
                ac.prediction_column = pred_col;
            if (!features_flag.empty()) {
                ac.features.clear();
                std::stringstream ss(features_flag);
                std::string tok;
                while (std::getline(ss, tok, ','))
                    ac.features.push_back(parse_feature_spec(tok));
            }
            if (audit->count("--direction") || config_path.empty())
                ac.direction = parse_direction_flag(direction);
            if (!theta_sweep_flag.empty()) {
                double lo, hi;
                int steps;
                if (std::sscanf(theta_sweep_flag.c_str(), "%lf:%lf:%d", &lo, &hi, &steps) != 3 ||
                    steps < 1)
                    throw ConfigError("--theta-sweep expects lo:hi:steps");
                ac.theta_sweep = true;
                ac.sweep_lo = lo;
                ac.sweep_hi = hi;
                ac.sweep_steps = steps;
            }
            if (ac.data_path.empty()) throw ConfigError("--data is required");
            if (ac.features.empty()) throw ConfigError("--features is required");

            auto report = biasscan::run_audit(ac, jobs);
            write_output(out_path, report.dump(2));
            if (!quiet) print_audit_summary(report);
        } else if (experiment->parsed()) {
            for (const auto& p : pattern_flags) ec.patterns.push_back(parse_pattern(p));
            ec.direction = parse_direction_flag(exp_direction);
            auto report = biasscan::run_experiment(ec, jobs);
            if (exp_format == "csv")
                write_output(exp_out, biasscan::experiment_to_csv(report));
            else if (exp_format == "json")
                write_output(exp_out, report.dump(2));
            else
                throw ConfigError("--format must be json or csv");
        } else if (synth->parsed()) {
            sp.injection_pattern = parse_pattern(synth_pattern);
            auto data = biasscan::generate_synthetic(sp);
            biasscan::write_csv(data.dataset, synth_out);
            if (!truth_out.empty()) {
                nlohmann::ordered_json t;
                t["biased_subgroup"] = biasscan::subgroup_to_json(data.truth.biased_subgroup);
                t["biased_cell_count"] = data.truth.biased_cell_count;
                t["affected_rows"] = data.truth.affected_rows;
                std::ofstream out(truth_out, std::ios::binary);
                if (!out) throw ConfigError("cannot open '" + truth_out + "'");
                out << t.dump(2) << '\n';
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
