#pragma once

// Sigma sweep and perturbation-knob experiments.

#include "sfi_lee/config.hpp"
#include "sfi_lee/eval.hpp"
#include "sfi_lee/metrics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sfi {

/// The four metrics reported per model.
const std::vector<MetricKind>& reported_metrics();

struct ReportRow {
    std::string experiment;
    std::string model;
    double sigma_init = 0.0;
    double lambda = 0.0;
    std::int64_t seed = 0;  ///< -1 on seed-averaged rows
    std::string metric;
    double metric_rate = 0.0;  ///< rate the metric was computed at
    double value = 0.0;
    double test_rate = 0.0;
    double degradation_db = 0.0;
    bool averaged = false;

    bool operator==(const ReportRow&) const = default;
};

/// Pearson correlation between two report columns.
struct Correlation {
    std::string x;  ///< "lambda" or a metric name
    std::string y;  ///< a metric name or "degradation"
    double metric_rate = 0.0;
    double test_rate = 0.0;  ///< 0 when degradation is not involved
    double rho = 0.0;        ///< NaN when undefined (see note)
    std::size_t points = 0;
    std::string note;
};

struct Report {
    std::string experiment;
    std::vector<ReportRow> rows;
    std::vector<Correlation> correlations;
    std::vector<std::string> skipped_tracks;
};

/// Segments of the configured dataset at `rate`.
SegmentSet load_segments(const ExperimentConfig& cfg, double rate);

/// For each sigma x seed: untrained SFI model, metrics at the trained rate,
/// SI-SDR degradation per test rate. Adds seed-averaged rows and one
/// correlation per (metric, test rate) over the averaged rows.
Report run_sigma_sweep(const ExperimentConfig& cfg);

/// One model (cfg.model, cfg.knob_seed) with the mask perturbation at each
/// lambda. Correlations: lambda vs each metric, each metric vs degradation.
Report run_perturbation_knob(const ExperimentConfig& cfg);

/// Metrics of one model on the configured data, one row per metric.
Report run_metrics(const ExperimentConfig& cfg, const Model& model);

}  // namespace sfi
