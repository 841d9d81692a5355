#ifndef KTM_TRAJECTORY_HPP
#define KTM_TRAJECTORY_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ktm/errors.hpp"

namespace ktm {

/// A 2-D waypoint in meters.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double point_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

/// Time-ordered waypoints; the time index is implicit (1..T in recording order).
struct DiscreteTrajectory {
  std::vector<Point> points;

  DiscreteTrajectory() = default;
  explicit DiscreteTrajectory(std::vector<Point> pts) : points(std::move(pts)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point& front() const { return points.front(); }
  const Point& back() const { return points.back(); }
  const Point& operator[](std::size_t i) const { return points[i]; }

  /// Throws InvalidInput unless the trajectory is non-empty with finite coordinates.
  void validate(const std::string& name = "trajectory") const {
    if (points.empty()) {
      throw InvalidInput(name + ": must contain at least one waypoint");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
        throw InvalidInput(name + ": non-finite coordinate at waypoint " + std::to_string(i));
      }
    }
  }
};

/// Trajectories retained as kernel projection centers, with their source
/// indices into the corpus they were selected from.
struct RepresentativeSet {
  std::vector<DiscreteTrajectory> trajectories;
  std::vector<std::size_t> source_indices;

  std::size_t size() const { return trajectories.size(); }
};

}  // namespace ktm

#endif  // KTM_TRAJECTORY_HPP
