#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "commands.hpp"
#include "pbr/estimator.hpp"
#include "pbr/scenario.hpp"
#include "pbr/simulate.hpp"

namespace {

// One trial's squared errors: per window size, (record n, squared error).
using TrialResult = std::vector<std::vector<std::pair<std::int64_t, double>>>;

TrialResult run_trial(const pbr::ScenarioConfig& base, std::uint64_t trial,
                      const std::vector<int>& windows, int robust_iters) {
  pbr::ScenarioConfig cfg = base;
  cfg.seed = base.seed ^ trial;  // paired across window sizes
  const auto records = pbr::simulate_trace(cfg);

  TrialResult out(windows.size());
  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    pbr::EstimatorConfig ecfg;
    ecfg.w = windows[wi];
    ecfg.robust_iters = robust_iters;
    const auto res = pbr::estimate_trace(records, ecfg);
    std::size_t ri = 0;
    for (const auto& est : res.estimates) {
      while (ri < records.size() && records[ri].n < est.n) ++ri;
      if (ri >= records.size() || records[ri].n != est.n ||
          !records[ri].true_d_A_m)
        continue;
      const double e = est.d_hat - *records[ri].true_d_A_m;
      out[wi].emplace_back(est.n, e * e);
    }
  }
  return out;
}

}  // namespace

void register_montecarlo(CLI::App& app) {
  struct Opts {
    std::string config;
    std::string out;
    std::vector<int> windows{8};
    int trials = 100;
    int robust_iters = 0;
    int threads = 0;
  };
  auto opts = std::make_shared<Opts>();

  CLI::App* cmd = app.add_subcommand(
      "montecarlo", "RMSE of the window estimator over repeated trials");
  cmd->add_option("config", opts->config, "scenario file")->required();
  cmd->add_option("-o,--out", opts->out, "per-(window, period) RMSE CSV")
      ->required();
  cmd->add_option("-w,--windows", opts->windows, "window sizes")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("-n,--trials", opts->trials, "independent seeds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--robust-iters", opts->robust_iters,
                  "reweighted refit count")
      ->capture_default_str();
  cmd->add_option("--threads", opts->threads, "worker threads (0 = auto)")
      ->capture_default_str();

  cmd->callback([opts] {
    const pbr::ScenarioConfig base = pbr::load_scenario(opts->config);
    for (int w : opts->windows)
      if (w < 2) throw std::invalid_argument("window size must be at least 2");

    const int n_trials = opts->trials;
    unsigned workers = opts->threads > 0
                           ? static_cast<unsigned>(opts->threads)
                           : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n_trials));

    // Fan trials out in contiguous chunks; aggregation below walks trials
    // in index order, so scheduling cannot affect the output.
    std::vector<std::future<std::vector<TrialResult>>> futs;
    const int chunk = (n_trials + static_cast<int>(workers) - 1) /
                      static_cast<int>(workers);
    for (int lo = 0; lo < n_trials; lo += chunk) {
      const int hi = std::min(n_trials, lo + chunk);
      futs.push_back(std::async(std::launch::async, [&, lo, hi] {
        std::vector<TrialResult> part;
        part.reserve(hi - lo);
        for (int t = lo; t < hi; ++t)
          part.push_back(run_trial(base, static_cast<std::uint64_t>(t),
                                   opts->windows, opts->robust_iters));
        return part;
      }));
    }

    struct Cell {
      double sum_sq = 0;
      std::size_t count = 0;
    };
    std::vector<std::map<std::int64_t, Cell>> agg(opts->windows.size());
    for (auto& f : futs) {
      for (const TrialResult& tr : f.get()) {
        for (std::size_t wi = 0; wi < tr.size(); ++wi) {
          for (const auto& [n, sq] : tr[wi]) {
            Cell& c = agg[wi][n];
            c.sum_sq += sq;
            c.count += 1;
          }
        }
      }
    }

    std::ofstream out(opts->out);
    if (!out) throw std::runtime_error("cannot open for writing: " + opts->out);
    out << "window,n,t_s,rmse_m,trials\n";
    char buf[160];
    for (std::size_t wi = 0; wi < opts->windows.size(); ++wi) {
      for (const auto& [n, cell] : agg[wi]) {
        std::snprintf(buf, sizeof buf, "%d,%lld,%.6f,%.6f,%zu",
                      opts->windows[wi], static_cast<long long>(n),
                      static_cast<double>(n) * base.period_s,
                      std::sqrt(cell.sum_sq / static_cast<double>(cell.count)),
                      cell.count);
        out << buf << "\n";
      }
    }
    if (!out) throw std::runtime_error("write failed: " + opts->out);
    std::cout << "ran " << n_trials << " trials over " << opts->windows.size()
              << " window sizes\n";
  });
}
