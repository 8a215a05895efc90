#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "viewforge/harness/experiment.hpp"

namespace viewforge::harness {

// JSON schema in docs/config.md. With timing == false, wall_seconds is omitted
// so identical runs serialize byte-identically.
std::string report_to_json(const RunReport& report, bool timing);
RunReport report_from_json(std::string_view text);
void write_report(const std::filesystem::path& path, const RunReport& report, bool timing);

// Every report.json under `dir` (recursively), ordered by path. Throws
// IoError when `dir` is missing and ExitEmpty when it holds no reports.
std::vector<RunReport> load_reports(const std::filesystem::path& dir);

// Rows are ordered by the sweep axes (numeric values compare numerically,
// ascending), then by run id.
std::vector<RunReport> sorted_by_axes(std::vector<RunReport> reports);

// One row per report: run_id, one column per axis, then the result columns.
std::string reports_csv(const std::vector<RunReport>& reports);

// {"runs": [...], "series": {axis: [{"x", "run_id", "best_probe_accuracy",
// "final_probe_accuracy", "final_mean_std", "status"}...]}}, each series sorted by x.
std::string reports_series_json(const std::vector<RunReport>& reports);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace viewforge::harness
