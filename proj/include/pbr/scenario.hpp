#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pbr/clock.hpp"
#include "pbr/trajectory.hpp"

namespace pbr {

// Receiver-side timestamp noise, specified in meters and applied in seconds
// (divided by the speed of light).
struct NoiseModel {
  double sigma_m = 0.3;       // Gaussian component
  double p_nlos = 0.0;        // probability of an extra positive excess
  double nlos_mean_m = 10.0;  // mean of the Exponential excess
};

struct VehicleSpec {
  std::string name;
  std::vector<Waypoint> waypoints;
  ClockModel clock;
};

struct ScenarioConfig {
  double period_s = 0.1;
  double jitter_s = 1e-3;       // transmit jitter, uniform in [-j, +j]
  double duration_s = 10.0;
  double max_speed_mps = 100.0;
  bool half_period_offset = true;
  double remote_offset_s = -1.0;  // >= 0 overrides the half-period default
  double p_drop = 0.0;            // independent per message
  std::uint64_t seed = 0;
  NoiseModel noise;
  std::vector<VehicleSpec> vehicles;  // pairwise traces use "local", "remote"

  // Offset of vehicle v's transmissions within each period. Vehicle 0
  // transmits at n*T; with K vehicles the others spread across the period,
  // vehicle 1 at the configured remote offset (default T/2).
  double transmit_offset_s(std::size_t v) const;

  void validate() const;  // throws std::invalid_argument
};

// Flat "key = value" file. '#' starts a comment. Waypoint lists use
// "traj.<vehicle>.waypoints = t:x:y;t:x:y;..." and clocks
// "clock.<vehicle>.theta_s|delta|drift_walk_std". Unknown keys are errors.
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig load_scenario(const std::string& path);

}  // namespace pbr
