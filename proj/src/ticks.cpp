#include "pbr/ticks.hpp"

#include <cmath>
#include <stdexcept>

namespace pbr {

Tick seconds_to_ticks(double seconds) {
  // 2^62 ticks is the arithmetic headroom bound for timestamp math.
  if (!(std::abs(seconds) < 4.6e8)) {
    throw std::invalid_argument("seconds out of tick range");
  }
  // The long double intermediate keeps the scaling error below the
  // conversion's half-tick rounding budget out to |t| = 2^52.
  return static_cast<Tick>(
      std::llroundl(static_cast<long double>(seconds) * 1e10L));
}

double ticks_to_seconds(Tick t) {
  return static_cast<double>(t) / 1e10;
}

double ticks_to_meters(Tick t) {
  return ticks_to_seconds(t) * kSpeedOfLightMps;
}

}  // namespace pbr
