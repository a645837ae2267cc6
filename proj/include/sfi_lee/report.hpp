#pragma once

// Report emission: CSV rows, JSON summary and SVG scatter plots.
//
// CSV header (fixed):
//   experiment,model,sigma_init,lambda,seed,metric,metric_rate,value,
//   test_rate,degradation_db,averaged
// seed is -1 and averaged is 1 on seed-averaged rows. Numbers use the
// shortest text that parses back to the same double.

#include "sfi_lee/experiment.hpp"

#include <string>
#include <vector>

namespace sfi {

extern const char* const kCsvHeader;

std::string rows_to_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_csv(const std::string& text);
std::vector<ReportRow> read_csv(const std::string& path);

std::string correlations_to_csv(const std::vector<Correlation>& cs);
std::string report_json(const Report& report);

/// Metric value (x) against degradation (y) for one (metric, metric rate,
/// test rate), with the least-squares line. Averaged rows are used when
/// present. Throws DataError when no row matches.
std::string scatter_svg(const std::vector<ReportRow>& rows, const std::string& metric, double metric_rate,
                        double test_rate);

/// Writes rows.csv, correlations.csv, report.json and one SVG per
/// (metric, metric rate, test rate); returns the written paths.
std::vector<std::string> emit_report(const Report& report, const std::string& dir);

std::string format_number(double v);

}  // namespace sfi
