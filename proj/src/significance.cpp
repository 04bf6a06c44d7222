#include "biasscan/significance.hpp"

#include "biasscan/parallel.hpp"
#include "biasscan/rng.hpp"

namespace biasscan {

SignificanceReport parametric_bootstrap(const Dataset& dataset, const ScanConfig& config,
                                        int replicates, std::uint64_t seed, int jobs,
                                        const ScanResult* observed) {
    if (replicates < 19)
        throw ConfigError("bootstrap replicates must be >= 19 for p < 0.05 to be attainable");

    SignificanceReport report;
    report.replicates = replicates;
    report.seed = seed;

    if (observed) {
        report.observed_score = observed->penalized_score;
    } else {
        report.observed_score = mdss_scan(dataset, config, jobs).penalized_score;
    }

    const std::size_t n = dataset.row_count();
    std::vector<std::vector<std::int32_t>> codes;
    for (std::size_t f = 0; f < dataset.feature_space().feature_count(); ++f)
        codes.push_back(dataset.codes(f));

    report.null_scores.assign(static_cast<std::size_t>(replicates), 0.0);
    parallel_for(report.null_scores.size(), jobs, [&](std::size_t b) {
        std::vector<std::uint8_t> y_star(n);
        for (std::size_t i = 0; i < n; ++i)
            y_star[i] = unit_at(seed, b + 1, i) < dataset.predictions()[i] ? 1 : 0;
        Dataset replicate(dataset.feature_space(), codes, std::move(y_star),
                          dataset.predictions());
        report.null_scores[b] = mdss_scan(replicate, config, 1).penalized_score;
    });

    std::size_t exceed = 0;
    for (double s : report.null_scores)
        if (s >= report.observed_score) ++exceed;
    report.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + replicates);
    return report;
}

}  // namespace biasscan
