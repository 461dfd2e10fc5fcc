#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pbr/trajectory.hpp"

using namespace pbr;

TEST_CASE("single waypoint means a static position") {
  Trajectory traj({{0.0, 3.0, 4.0}});
  for (double t : {-10.0, 0.0, 5.0, 1e6}) {
    const auto p = traj.position_at(t);
    CHECK(p.x_m == 3.0);
    CHECK(p.y_m == 4.0);
  }
}

TEST_CASE("positions interpolate linearly inside a segment") {
  Trajectory traj({{0.0, 0.0, 0.0}, {10.0, 100.0, -50.0}});
  auto p = traj.position_at(5.0);
  CHECK(p.x_m == doctest::Approx(50.0));
  CHECK(p.y_m == doctest::Approx(-25.0));
  p = traj.position_at(2.5);
  CHECK(p.x_m == doctest::Approx(25.0));
  CHECK(p.y_m == doctest::Approx(-12.5));
}

TEST_CASE("positions clamp outside the waypoint span") {
  Trajectory traj({{1.0, 10.0, 0.0}, {2.0, 20.0, 5.0}});
  CHECK(traj.position_at(0.0).x_m == 10.0);
  CHECK(traj.position_at(0.0).y_m == 0.0);
  CHECK(traj.position_at(99.0).x_m == 20.0);
  CHECK(traj.position_at(99.0).y_m == 5.0);
}

TEST_CASE("multi-segment paths pick the right segment") {
  Trajectory traj({{0.0, 0.0, 0.0}, {1.0, 10.0, 0.0}, {3.0, 10.0, 20.0}});
  CHECK(traj.position_at(0.5).x_m == doctest::Approx(5.0));
  CHECK(traj.position_at(0.5).y_m == doctest::Approx(0.0));
  CHECK(traj.position_at(2.0).x_m == doctest::Approx(10.0));
  CHECK(traj.position_at(2.0).y_m == doctest::Approx(10.0));
}

TEST_CASE("invalid waypoint lists are rejected") {
  CHECK_THROWS_AS(Trajectory({}), std::invalid_argument);
  CHECK_THROWS_AS(Trajectory({{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Trajectory({{1.0, 0.0, 0.0}, {0.5, 1.0, 0.0}}),
                  std::invalid_argument);
}

TEST_CASE("segment speeds above the cap are rejected") {
  // 150 m in 1 s exceeds the default 100 m/s cap.
  CHECK_THROWS_AS(Trajectory({{0.0, 0.0, 0.0}, {1.0, 150.0, 0.0}}),
                  std::invalid_argument);
  CHECK_NOTHROW(Trajectory({{0.0, 0.0, 0.0}, {1.0, 150.0, 0.0}}, 200.0));
  // Diagonal speed counts: 90 m east and 90 m north in 1 s is ~127 m/s.
  CHECK_THROWS_AS(Trajectory({{0.0, 0.0, 0.0}, {1.0, 90.0, 90.0}}),
                  std::invalid_argument);
  CHECK_NOTHROW(Trajectory({{0.0, 0.0, 0.0}, {1.0, 99.0, 0.0}}));
}

TEST_CASE("distance_between evaluates both paths at the same instant") {
  Trajectory a({{0.0, 0.0, 0.0}});
  Trajectory b({{0.0, 30.0, 40.0}, {10.0, 30.0, 0.0}});
  CHECK(distance_between(a, b, 0.0) == doctest::Approx(50.0));
  CHECK(distance_between(a, b, 10.0) == doctest::Approx(30.0));
  CHECK(distance_between(a, b, 5.0) == doctest::Approx(std::hypot(30.0, 20.0)));
  CHECK(distance_between(b, a, 5.0) == doctest::Approx(std::hypot(30.0, 20.0)));
}
