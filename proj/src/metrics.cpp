#include "pbr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace pbr {

MetricsReport compute_metrics(std::vector<double> abs_errors,
                              std::size_t skipped_windows) {
  for (double e : abs_errors)
    if (!(e >= 0.0)) throw std::invalid_argument("errors must be non-negative");

  MetricsReport r;
  r.count = abs_errors.size();
  r.skipped_windows = skipped_windows;
  if (abs_errors.empty()) return r;

  std::sort(abs_errors.begin(), abs_errors.end());

  double sq = 0.0;
  for (double e : abs_errors) sq += e * e;
  r.rmse_m = std::sqrt(sq / static_cast<double>(abs_errors.size()));

  const auto n = abs_errors.size();
  for (int p : {50, 90, 95}) {
    const auto rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(n)));
    r.percentile_errors[p] = abs_errors[std::max<std::size_t>(rank, 1) - 1];
  }

  for (std::size_t i = 0; i < n; ++i) {
    // collapse ties onto the last occurrence so the fraction is P(X <= e)
    if (i + 1 < n && abs_errors[i + 1] == abs_errors[i]) continue;
    r.cdf.emplace_back(abs_errors[i],
                       static_cast<double>(i + 1) / static_cast<double>(n));
  }
  return r;
}

std::string metrics_json(const MetricsReport& report) {
  nlohmann::json j;
  j["count"] = report.count;
  j["skipped_windows"] = report.skipped_windows;
  if (report.rmse_m)
    j["rmse_m"] = *report.rmse_m;
  else
    j["rmse_m"] = nullptr;
  nlohmann::json pct;
  for (int p : {50, 90, 95}) {
    const std::string key = std::to_string(p);
    auto it = report.percentile_errors.find(p);
    if (it == report.percentile_errors.end())
      pct[key] = nullptr;
    else
      pct[key] = it->second;
  }
  j["percentile_errors"] = pct;
  nlohmann::json cdf = nlohmann::json::array();
  for (const auto& [e, f] : report.cdf) cdf.push_back({e, f});
  j["cdf"] = cdf;
  return j.dump(2) + "\n";
}

}  // namespace pbr
