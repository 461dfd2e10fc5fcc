#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pbr {

// Error statistics over the emitted (non-skipped) estimates of a trace.
struct MetricsReport {
  std::size_t count = 0;
  std::size_t skipped_windows = 0;
  std::optional<double> rmse_m;                  // absent when count == 0
  std::map<int, double> percentile_errors;       // 50, 90, 95; empty if none
  std::vector<std::pair<double, double>> cdf;    // (error_m, fraction <=)
};

// abs_errors are |d_hat - d_true| in meters. Percentiles use the
// nearest-rank rule (1-based rank ceil(p/100 * N)); the CDF lists each
// distinct error with its cumulative fraction and ends at 1.0.
MetricsReport compute_metrics(std::vector<double> abs_errors,
                              std::size_t skipped_windows);

// JSON object with keys count, skipped_windows, rmse_m, percentile_errors
// ("50"/"90"/"95"), cdf (array of [error, fraction]); missing statistics
// serialize as null.
std::string metrics_json(const MetricsReport& report);

}  // namespace pbr
