#include "pbr/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pbr {

namespace {

// Lower median: element (n-1)/2 of the sorted magnitudes.
double median_abs(const Eigen::VectorXd& v) {
  std::vector<double> mags(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) mags[i] = std::abs(v[i]);
  auto mid = mags.begin() + (mags.size() - 1) / 2;
  std::nth_element(mags.begin(), mid, mags.end());
  return *mid;
}

Eigen::MatrixXd cov_inv_sqrt(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("covariance not positive definite");
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

// The transform depends only on the window width, so sweeps compute it
// once and solve every window against the same matrix.
GlsSolution solve_whitened(const LinearSystem& sys,
                           const Eigen::MatrixXd& inv_sqrt,
                           const Eigen::VectorXd* gamma,
                           double condition_limit) {
  const Eigen::Index m = sys.beta.size();
  if (sys.B.rows() != m || inv_sqrt.rows() != m || inv_sqrt.cols() != m)
    throw std::invalid_argument("system dimensions disagree");
  if (m < 4) throw std::invalid_argument("underdetermined system");

  const Eigen::MatrixXd A = inv_sqrt * sys.B;
  const Eigen::VectorXd y = inv_sqrt * sys.beta;

  Eigen::MatrixXd Aw = A;
  Eigen::VectorXd yw = y;
  if (gamma != nullptr) {
    if (gamma->size() != m)
      throw std::invalid_argument("weight vector length disagrees");
    Eigen::Index positive = 0;
    for (Eigen::Index i = 0; i < m; ++i)
      if ((*gamma)(i) > 0.0) ++positive;
    if (positive < 4) throw std::invalid_argument("too few positive weights");
    const Eigen::VectorXd sq = gamma->cwiseMax(0.0).cwiseSqrt();
    Aw = sq.asDiagonal() * A;
    yw = sq.asDiagonal() * y;
  }

  // Column equilibration keeps the pivoted-QR condition estimate about the
  // problem geometry rather than the wildly different column scales
  // (meters vs. seconds-squared).
  Eigen::Vector4d scale;
  for (int c = 0; c < 4; ++c) {
    const double norm = Aw.col(c).norm();
    scale(c) = norm > 0.0 ? 1.0 / norm : 1.0;
  }
  const Eigen::MatrixXd Ae = Aw * scale.asDiagonal();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Ae);
  const Eigen::MatrixXd& R = qr.matrixR();
  const double r_first = std::abs(R(0, 0));
  const double r_last = std::abs(R(3, 3));
  const double condition =
      r_last > 0.0 ? r_first / r_last : std::numeric_limits<double>::infinity();
  if (!(condition <= condition_limit))
    throw std::runtime_error("degenerate window");

  GlsSolution sol;
  sol.x = scale.asDiagonal() * qr.solve(yw);
  sol.diagnostics.residuals = y - A * sol.x;
  if (gamma != nullptr)
    sol.diagnostics.final_weights = gamma->cwiseMax(0.0);
  else
    sol.diagnostics.final_weights = Eigen::VectorXd::Ones(m);
  sol.diagnostics.median_abs_residual = median_abs(sol.diagnostics.residuals);
  sol.diagnostics.condition_estimate = condition;
  return sol;
}

Eigen::MatrixXd fit_transform(int w, const EstimatorConfig& cfg) {
  return cfg.whiten ? cov_inv_sqrt(whitening_cov(w))
                    : Eigen::MatrixXd::Identity(2 * w, 2 * w);
}

RangeEstimate fit_whitened(const DeltaWindow& win, const EstimatorConfig& cfg,
                           const Eigen::MatrixXd& inv_sqrt) {
  const int w = static_cast<int>(win.dt_D.size());
  if (w < 2) throw std::invalid_argument("window size must be at least 2");
  if (cfg.robust_iters < 0)
    throw std::invalid_argument("robust iteration count must be >= 0");

  const LinearSystem sys = design_system(win, cfg);

  GlsSolution sol = solve_whitened(sys, inv_sqrt, nullptr, cfg.condition_limit);
  Eigen::VectorXd gamma;
  for (int iter = 0; iter < cfg.robust_iters; ++iter) {
    const double med = sol.diagnostics.median_abs_residual;
    if (med == 0.0) break;  // residuals at machine floor, nothing to down-weight
    const double denom = 36.0 * med * med;
    gamma.resize(2 * w);
    Eigen::Index positive = 0;
    for (Eigen::Index i = 0; i < 2 * w; ++i) {
      const double e = sol.diagnostics.residuals(i);
      const double u = std::max(0.0, 1.0 - e * e / denom);
      gamma(i) = u * u;
      if (gamma(i) > 0.0) ++positive;
    }
    // A fit this contaminated cannot support a reweighted solve; keep the
    // last accepted one.
    if (positive < 4) break;
    sol = solve_whitened(sys, inv_sqrt, &gamma, cfg.condition_limit);
  }

  RangeEstimate est;
  est.n = win.n;
  est.t_A_n = win.t_A.back();
  est.delta_hat = sol.x(0);
  est.a0 = sol.x(1);
  est.a1 = sol.x(2);
  est.a2 = sol.x(3);
  est.d_hat = est.a0 + est.a1 * sys.tau + est.a2 * sys.tau * sys.tau;
  est.diagnostics = std::move(sol.diagnostics);
  return est;
}

}  // namespace

DeltaWindow build_window(const std::vector<ExchangeRecord>& records,
                         std::size_t last, int w) {
  if (w < 1) throw std::invalid_argument("window size must be at least 1");
  if (last >= records.size() || last < static_cast<std::size_t>(w))
    throw std::invalid_argument("window gap");

  DeltaWindow win;
  win.n = records[last].n;
  win.t_D.reserve(w + 1);
  win.t_A.reserve(w + 1);
  for (std::size_t i = last - w; i <= last; ++i) {
    win.t_D.push_back(records[i].t_D);
    win.t_A.push_back(records[i].t_A);
  }
  for (int i = 1; i <= w; ++i) {
    const ExchangeRecord& cur = records[last - w + i];
    const ExchangeRecord& prev = records[last - w + i - 1];
    if (cur.n != prev.n + 1 || cur.t_D <= prev.t_D)
      throw std::invalid_argument("window gap");
    win.dt_D.push_back(cur.t_D - prev.t_D);
    win.ds_A.push_back(cur.s_A - prev.s_A);
    win.dt_A.push_back(cur.t_D - prev.t_A);
    win.ds_D.push_back(cur.s_A - prev.s_D);
  }
  return win;
}

LinearSystem design_system(const DeltaWindow& win, const EstimatorConfig& cfg) {
  const int w = static_cast<int>(win.dt_D.size());
  if (w < 1 || win.t_D.size() != static_cast<std::size_t>(w) + 1)
    throw std::invalid_argument("malformed window");

  const Tick org = cfg.recenter ? win.t_D[1] : 0;
  auto basis_time = [org](Tick t) { return ticks_to_seconds(t - org); };

  LinearSystem sys;
  sys.beta.resize(2 * w);
  sys.B.resize(2 * w, 4);
  for (int i = 1; i <= w; ++i) {
    const int j = i - 1;
    // Integer tick differences first; only the small residuals see a
    // double conversion.
    sys.beta(j) = kSpeedOfLightMps * ticks_to_seconds(win.ds_A[j] - win.dt_D[j]);
    sys.beta(w + j) =
        kSpeedOfLightMps * ticks_to_seconds(win.ds_D[j] - win.dt_A[j]);

    const double tDi = basis_time(win.t_D[i]);
    const double tDp = basis_time(win.t_D[i - 1]);
    const double tAp = basis_time(win.t_A[i - 1]);

    sys.B(j, 0) = kSpeedOfLightMps * ticks_to_seconds(win.dt_D[j]);
    sys.B(j, 1) = 0.0;
    sys.B(j, 2) = tDi - tDp;
    sys.B(j, 3) = tDi * tDi - tDp * tDp;

    sys.B(w + j, 0) = kSpeedOfLightMps * ticks_to_seconds(win.dt_A[j]);
    sys.B(w + j, 1) = 2.0;
    sys.B(w + j, 2) = tDi + tAp;
    sys.B(w + j, 3) = tDi * tDi + tAp * tAp;
  }
  sys.tau = basis_time(win.t_A[w]);
  return sys;
}

Eigen::MatrixXd whitening_cov(int w) {
  if (w < 1) throw std::invalid_argument("window size must be at least 1");
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * w, 2 * w);
  for (int i = 0; i < w; ++i) {
    // Both equation families difference two unit-variance stamps.
    cov(i, i) = 2.0;
    cov(w + i, w + i) = 2.0;
    // Consecutive same-stream rows share one stamp with opposite signs.
    if (i + 1 < w) {
      cov(i, i + 1) = -1.0;
      cov(i + 1, i) = -1.0;
    }
    // Row i of each family carries the same arrival stamp: +1. The
    // cross-stream row one step back holds its negation: -1.
    cov(i, w + i) = 1.0;
    cov(w + i, i) = 1.0;
    if (i + 1 < w) {
      cov(i + 1, w + i) = -1.0;
      cov(w + i, i + 1) = -1.0;
    }
  }
  return cov;
}

GlsSolution gls_solve(const LinearSystem& sys, const Eigen::MatrixXd& cov,
                      const Eigen::VectorXd* gamma, double condition_limit) {
  const Eigen::Index m = sys.beta.size();
  if (sys.B.rows() != m || cov.rows() != m || cov.cols() != m)
    throw std::invalid_argument("system dimensions disagree");
  if (m < 4) throw std::invalid_argument("underdetermined system");
  return solve_whitened(sys, cov_inv_sqrt(cov), gamma, condition_limit);
}

RangeEstimate robust_fit(const DeltaWindow& win, const EstimatorConfig& cfg) {
  const int w = static_cast<int>(win.dt_D.size());
  if (w < 2) throw std::invalid_argument("window size must be at least 2");
  return fit_whitened(win, cfg, fit_transform(w, cfg));
}

TraceEstimates estimate_trace(const std::vector<ExchangeRecord>& records,
                              const EstimatorConfig& cfg) {
  if (cfg.w < 2) throw std::invalid_argument("window size must be at least 2");
  TraceEstimates out;
  if (records.size() <= static_cast<std::size_t>(cfg.w)) return out;

  const Eigen::MatrixXd inv_sqrt = fit_transform(cfg.w, cfg);

  // Run length of gap-free records ending at the current index.
  std::size_t run = 1;
  for (std::size_t idx = 1; idx < records.size(); ++idx) {
    if (records[idx].n == records[idx - 1].n + 1 &&
        records[idx].t_D > records[idx - 1].t_D)
      ++run;
    else
      run = 1;
    if (idx < static_cast<std::size_t>(cfg.w)) continue;
    if (run < static_cast<std::size_t>(cfg.w) + 1) {
      ++out.skipped_windows;
      continue;
    }
    try {
      out.estimates.push_back(
          fit_whitened(build_window(records, idx, cfg.w), cfg, inv_sqrt));
    } catch (const std::runtime_error&) {
      ++out.skipped_windows;
    }
  }
  return out;
}

double rtt_estimate(const ExchangeRecord& rec) {
  const Tick local_span = rec.t_A - rec.t_D;
  const Tick remote_span = rec.s_D - rec.s_A;
  return 0.5 * kSpeedOfLightMps * ticks_to_seconds(local_span - remote_span);
}

}  // namespace pbr
