#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pbr/simulate.hpp"
#include "pbr/ticks.hpp"

namespace pbr {

struct EstimatorConfig {
  int w = 8;              // rounds per window, >= 2
  int robust_iters = 5;   // reweighted refits after the initial solve
  bool recenter = true;   // shift the time origin into the window
  bool whiten = true;     // identity weighting when false (for comparisons)
  double condition_limit = 1e12;
};

// Timestamp differences for one window ending at record n, plus the raw
// local stamps for the polynomial basis. Entry i of each delta vector
// spans records (i, i+1) of the w+1 window records. The current remote
// departure never enters: the cross deltas reach back one round, so every
// entry is computable at the local vehicle by t_A(n).
struct DeltaWindow {
  std::int64_t n = 0;
  std::vector<Tick> t_D;   // w+1
  std::vector<Tick> t_A;   // w+1
  std::vector<Tick> dt_D;  // w: t_D(i) - t_D(i-1)
  std::vector<Tick> ds_A;  // w: s_A(i) - s_A(i-1)
  std::vector<Tick> dt_A;  // w: t_D(i) - t_A(i-1)
  std::vector<Tick> ds_D;  // w: s_A(i) - s_D(i-1)
};

// Window over records[last-w .. last]. The records must be consecutive in
// n with increasing departure stamps; otherwise throws
// std::invalid_argument("window gap").
DeltaWindow build_window(const std::vector<ExchangeRecord>& records,
                         std::size_t last, int w);

// beta = c * (ds_A - dt_D ; ds_D - dt_A) in meters. B columns multiply
// x = (delta, a0, a1, a2); basis times in seconds, recentered to the
// window's second departure when cfg.recenter. tau is the prediction
// instant t_A(n) in the same basis.
struct LinearSystem {
  Eigen::VectorXd beta;  // 2w
  Eigen::MatrixXd B;     // 2w x 4
  double tau = 0.0;
};

LinearSystem design_system(const DeltaWindow& win, const EstimatorConfig& cfg);

// Covariance shape of the per-equation noise under unit-variance iid
// per-stamp noise: both delta blocks difference two stamps, and pairs of
// equations sharing a stamp correlate. Symmetric positive definite with
// diagonal 2.
Eigen::MatrixXd whitening_cov(int w);

struct FitDiagnostics {
  Eigen::VectorXd residuals;      // whitened, unweighted
  Eigen::VectorXd final_weights;  // per-equation, in [0,1]
  double median_abs_residual = 0.0;
  double condition_estimate = 0.0;
};

struct GlsSolution {
  Eigen::Vector4d x;  // (delta_hat, a0, a1, a2)
  FitDiagnostics diagnostics;
};

// Weighted generalized least squares: minimizes
// ||G^{1/2} (C^{-1/2} beta - C^{-1/2} B x)||^2 for covariance shape C and
// per-equation weights gamma (all-ones when null), via column-equilibrated
// QR of the whitened system. Throws std::runtime_error("degenerate
// window") when the equilibrated condition estimate exceeds the limit,
// and std::invalid_argument when fewer than 4 weights are positive.
GlsSolution gls_solve(const LinearSystem& sys, const Eigen::MatrixXd& cov,
                      const Eigen::VectorXd* gamma = nullptr,
                      double condition_limit = 1e12);

struct RangeEstimate {
  std::int64_t n = 0;
  Tick t_A_n = 0;
  double d_hat = 0.0;      // meters, at the arrival instant
  double delta_hat = 0.0;  // relative clock drift
  double a0 = 0.0;         // meters
  double a1 = 0.0;         // m/s
  double a2 = 0.0;         // m/s^2
  FitDiagnostics diagnostics;
};

// Bisquare-reweighted GLS over one window: initial unweighted fit, then
// cfg.robust_iters cycles of weights clamp(1 - e_i^2/(36 m^2), 0)^2 with
// m the lower median of |whitened residuals|. m = 0 stops early with unit
// weights.
RangeEstimate robust_fit(const DeltaWindow& win, const EstimatorConfig& cfg);

struct TraceEstimates {
  std::vector<RangeEstimate> estimates;
  std::size_t skipped_windows = 0;  // record gaps plus degenerate solves
};

// Sliding-window estimation over a trace sorted by n. Causal: the window
// ending at n uses only records up to n; positions without w+1 gap-free
// records, and windows refused as degenerate, are skipped and counted.
TraceEstimates estimate_trace(const std::vector<ExchangeRecord>& records,
                              const EstimatorConfig& cfg = {});

// Round-trip-time baseline over a single exchange: half the difference
// between the local and remote spans. Carries the full clock-drift error
// of the inter-message gap.
double rtt_estimate(const ExchangeRecord& rec);

}  // namespace pbr
