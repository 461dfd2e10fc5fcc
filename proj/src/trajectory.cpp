#include "pbr/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pbr {

Trajectory::Trajectory(std::vector<Waypoint> waypoints, double max_speed_mps)
    : waypoints_(std::move(waypoints)) {
  if (waypoints_.empty()) {
    throw std::invalid_argument("trajectory needs at least one waypoint");
  }
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    const auto& p = waypoints_[i - 1];
    const auto& q = waypoints_[i];
    if (!(q.t_s > p.t_s)) {
      throw std::invalid_argument("waypoint times must be strictly increasing");
    }
    const double speed =
        std::hypot(q.x_m - p.x_m, q.y_m - p.y_m) / (q.t_s - p.t_s);
    if (speed > max_speed_mps) {
      throw std::invalid_argument("waypoint segment exceeds max speed");
    }
  }
}

Trajectory::Position Trajectory::position_at(double t_s) const {
  const auto& w = waypoints_;
  if (t_s <= w.front().t_s || w.size() == 1) {
    return {w.front().x_m, w.front().y_m};
  }
  if (t_s >= w.back().t_s) {
    return {w.back().x_m, w.back().y_m};
  }
  const auto it = std::upper_bound(
      w.begin(), w.end(), t_s,
      [](double t, const Waypoint& p) { return t < p.t_s; });
  const auto& q = *it;
  const auto& p = *(it - 1);
  const double u = (t_s - p.t_s) / (q.t_s - p.t_s);
  return {p.x_m + u * (q.x_m - p.x_m), p.y_m + u * (q.y_m - p.y_m)};
}

double distance_between(const Trajectory& a, const Trajectory& b, double t_s) {
  const auto pa = a.position_at(t_s);
  const auto pb = b.position_at(t_s);
  return std::hypot(pb.x_m - pa.x_m, pb.y_m - pa.y_m);
}

}  // namespace pbr
