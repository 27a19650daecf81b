#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <vector>

#include "slam2d/errors.hpp"

namespace slam2d {

/// One revolution of a 2D range sensor. NaN or out-of-bounds entries in
/// `ranges` mark invalid returns.
struct LaserScan {
  double t = 0.0;  // seconds, monotonic within a dataset
  double angle_min = 0.0;
  double angle_increment = 0.0;  // > 0
  double range_min = 0.0;        // < range_max
  double range_max = 0.0;
  std::vector<double> ranges;
};

/// Cartesian point cloud, optionally with a per-point 2x2 covariance.
struct PointCloud2 {
  std::vector<Eigen::Vector2d> points;
  std::vector<Eigen::Matrix2d> covs;  // empty, or same length as points

  bool has_covs() const { return !covs.empty() && covs.size() == points.size(); }
  std::size_t size() const { return points.size(); }
};

/// Projects valid returns to Cartesian points, preserving scan order.
/// Throws EmptyCloud when fewer than `min_points` returns are valid
/// (the default of 10 marks a scan too degenerate to register).
inline PointCloud2 scan_to_cloud(const LaserScan& scan, std::size_t min_points = 10) {
  if (!(scan.angle_increment > 0.0) || !(scan.range_min < scan.range_max)) {
    throw std::invalid_argument("scan_to_cloud: malformed LaserScan");
  }
  PointCloud2 cloud;
  cloud.points.reserve(scan.ranges.size());
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = scan.ranges[i];
    if (!std::isfinite(r) || r < scan.range_min || r > scan.range_max) {
      continue;
    }
    const double angle = scan.angle_min + static_cast<double>(i) * scan.angle_increment;
    cloud.points.emplace_back(r * std::cos(angle), r * std::sin(angle));
  }
  if (cloud.points.size() < min_points) {
    throw EmptyCloud("scan at t=" + std::to_string(scan.t) + " has only " +
                     std::to_string(cloud.points.size()) + " valid returns");
  }
  return cloud;
}

}  // namespace slam2d
