#include "pbr/clock.hpp"

#include <cmath>
#include <stdexcept>

namespace pbr {

Clock::Clock(const ClockModel& model, std::uint64_t seed)
    : model_(model), rng_(seed), delta_(model.delta) {
  if (!(std::abs(model.delta) <= 1e-3)) {
    throw std::invalid_argument("clock drift out of sanity range");
  }
  if (model.drift_walk_std < 0.0 || !std::isfinite(model.drift_walk_std)) {
    throw std::invalid_argument("drift_walk_std must be >= 0");
  }
}

Tick Clock::to_local(Tick t_true, double extra_seconds) {
  const long double theta_ticks =
      static_cast<long double>(model_.theta_s) * 1e10L;
  const long double extra_ticks =
      static_cast<long double>(extra_seconds) * 1e10L;
  if (!walks()) {
    return static_cast<Tick>(std::llroundl(
        theta_ticks + extra_ticks +
        (1.0L + static_cast<long double>(delta_)) * t_true));
  }
  if (!started_) {
    started_ = true;
    last_t_ = t_true;
    local_ = (1.0L + static_cast<long double>(delta_)) * t_true;
  } else {
    if (t_true < last_t_) {
      throw std::runtime_error("non-monotone clock query");
    }
    const Tick dt = t_true - last_t_;
    local_ += (1.0L + static_cast<long double>(delta_)) * dt;
    if (dt > 0) {
      const double dt_s = ticks_to_seconds(dt);
      delta_ += gauss_(rng_) * model_.drift_walk_std * std::sqrt(dt_s);
      last_t_ = t_true;
    }
  }
  return static_cast<Tick>(std::llroundl(theta_ticks + local_ + extra_ticks));
}

}  // namespace pbr
