#pragma once

#include <cstdint>

namespace pbr {

// All timestamps and timestamp arithmetic use integer ticks of 0.1 ns.
// Doubles appear only at the edges (config parsing, reporting, and the
// floating-point least-squares solve).
using Tick = std::int64_t;

inline constexpr Tick kTicksPerSecond = 10'000'000'000;

inline constexpr double kSpeedOfLightMps = 299'792'458.0;

// Round-to-nearest. Round-trips ticks_to_seconds exactly for |t| <= 2^52.
Tick seconds_to_ticks(double seconds);

// For display and floating-point math only, never a substitute for tick
// arithmetic on timestamps.
double ticks_to_seconds(Tick t);

double ticks_to_meters(Tick t);

}  // namespace pbr
