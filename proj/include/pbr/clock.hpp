#pragma once

#include <cstdint>
#include <random>

#include "pbr/ticks.hpp"

namespace pbr {

// Affine clock s(t) = theta + (1 + delta) * t over true time t, with an
// optional Gaussian random walk on delta.
struct ClockModel {
  double theta_s = 0.0;
  double delta = 0.0;            // fractional rate error, |delta| <= 1e-3
  double drift_walk_std = 0.0;   // per sqrt(second); 0 keeps delta constant
};

class Clock {
 public:
  // Throws std::invalid_argument if |delta| exceeds the 1e-3 sanity bound
  // or drift_walk_std is negative.
  explicit Clock(const ClockModel& model, std::uint64_t seed = 0);

  // Local reading at true time t, rounded to the nearest tick.
  // Constant-drift clocks accept queries in any order. A walking clock
  // integrates delta stepwise between queries, so t must be nondecreasing;
  // throws std::runtime_error("non-monotone clock query") otherwise.
  Tick to_local(Tick t_true) { return to_local(t_true, 0.0); }

  // Same, plus an additive term (flight time, measurement noise) folded in
  // before the single rounding so a stamp never rounds twice. The extra
  // term does not advance a walking clock's drift state.
  Tick to_local(Tick t_true, double extra_seconds);

  // Drift in effect for the interval starting at the last query.
  double instantaneous_delta() const { return delta_; }

  bool walks() const { return model_.drift_walk_std > 0.0; }

 private:
  ClockModel model_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  bool started_ = false;
  Tick last_t_ = 0;
  long double local_ = 0.0L;  // unrounded local ticks at last_t_
  double delta_ = 0.0;
};

}  // namespace pbr
