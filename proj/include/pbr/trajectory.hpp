#pragma once

#include <vector>

#include "pbr/ticks.hpp"

namespace pbr {

struct Waypoint {
  double t_s = 0.0;
  double x_m = 0.0;
  double y_m = 0.0;
};

// Piecewise-linear 2D path. Position is clamped to the first/last waypoint
// outside the waypoint time span.
class Trajectory {
 public:
  // Throws std::invalid_argument on an empty waypoint list, non-increasing
  // waypoint times, or a segment whose implied speed exceeds max_speed.
  explicit Trajectory(std::vector<Waypoint> waypoints,
                      double max_speed_mps = 100.0);

  struct Position {
    double x_m = 0.0;
    double y_m = 0.0;
  };

  Position position_at(double t_s) const;

  const std::vector<Waypoint>& waypoints() const { return waypoints_; }

 private:
  std::vector<Waypoint> waypoints_;
};

double distance_between(const Trajectory& a, const Trajectory& b, double t_s);

}  // namespace pbr
