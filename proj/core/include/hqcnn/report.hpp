#pragma once

// Output helpers for run directories: atomic file writes, fixed-format CSV
// numbers, SVG curve plots and the metrics report.

#include "hqcnn/diagnostics.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hqcnn::report {

/// "%.6f".
std::string fixed6(double v);

/// Writes `<path>.partial`, then renames it to `path`. On failure the
/// `.partial` file is left behind and IoError is thrown.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

struct Series {
    std::string label;
    std::string color;
    std::vector<double> values;
};

/// Line plot of per-epoch values in [0, 1] with axis ticks.
std::string svg_line_plot(const std::vector<Series>& series, std::string_view title,
                          std::string_view y_label = "accuracy");

/// Metric values keyed by their report names; nullopt renders as null / "not reached".
using MetricMap = std::map<std::string, std::optional<double>>;

/// Maps curve metrics to the report keys (final_gap, mean_gap, epoch_to_90, ...).
MetricMap curve_metric_map(const diagnostics::CurveMetrics& m);

/// `key = value` lines, values with 6 decimals, keys in map order.
std::string key_value_report(const MetricMap& metrics);

} // namespace hqcnn::report
