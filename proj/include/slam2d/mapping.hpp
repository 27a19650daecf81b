#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "slam2d/errors.hpp"
#include "slam2d/evaluation.hpp"
#include "slam2d/geometry.hpp"
#include "slam2d/scan.hpp"
#include "slam2d/trajectory.hpp"

namespace slam2d {

/// Hit-count grid built from world-frame scan points. No free-space model:
/// occupancy is classified downstream by thresholding the hit counts.
struct GridMap {
  double resolution = 0.05;  // metres per cell
  Pose2 origin;              // pose of cell (0, 0); axis-aligned
  int width = 0;             // cells
  int height = 0;
  std::vector<std::uint32_t> hits;  // row-major, row 0 at minimum y

  std::uint32_t at(int col, int row) const {
    return hits[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + col];
  }
  std::uint64_t total_hits() const {
    std::uint64_t sum = 0;
    for (std::uint32_t h : hits) sum += h;
    return sum;
  }
};

/// Transforms every valid scan point into the world frame along the
/// trajectory (scans associate to poses by nearest timestamp within max_dt)
/// and bins the points. Bounds are auto-computed with a 1 m margin.
inline GridMap build_map(const Trajectory& traj, const std::vector<LaserScan>& scans,
                         double resolution = 0.05, double max_dt = 0.02) {
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("build_map: resolution must be > 0");
  }
  // reuse the evaluation association on the scan timestamps
  Trajectory scan_times;
  scan_times.reserve(scans.size());
  for (const LaserScan& s : scans) scan_times.push_back({s.t, Pose2::identity()});
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  try {
    pairs = associate(traj, scan_times, max_dt);
  } catch (const NoMatches&) {
    throw NoAssociations("build_map: no scan matches any trajectory pose");
  }

  std::vector<Eigen::Vector2d> world_points;
  for (const auto& [pose_idx, scan_idx] : pairs) {
    PointCloud2 cloud;
    try {
      cloud = scan_to_cloud(scans[scan_idx], 1);
    } catch (const EmptyCloud&) {
      continue;  // nothing to rasterize from this scan
    }
    for (const Eigen::Vector2d& p : cloud.points) {
      world_points.push_back(transform_point(traj[pose_idx].pose, p));
    }
  }

  GridMap map;
  map.resolution = resolution;
  if (world_points.empty()) {
    map.origin = Pose2(0.0, 0.0, 0.0);
    map.width = map.height = 1;
    map.hits.assign(1, 0);
    return map;
  }
  Eigen::Vector2d mn = world_points.front(), mx = mn;
  for (const Eigen::Vector2d& p : world_points) {
    mn = mn.cwiseMin(p);
    mx = mx.cwiseMax(p);
  }
  mn.array() -= 1.0;
  mx.array() += 1.0;
  map.origin = Pose2(mn.x(), mn.y(), 0.0);
  map.width = static_cast<int>(std::floor((mx.x() - mn.x()) / resolution)) + 1;
  map.height = static_cast<int>(std::floor((mx.y() - mn.y()) / resolution)) + 1;
  map.hits.assign(static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height), 0);
  for (const Eigen::Vector2d& p : world_points) {
    const int col = static_cast<int>(std::floor((p.x() - mn.x()) / resolution));
    const int row = static_cast<int>(std::floor((p.y() - mn.y()) / resolution));
    if (col >= 0 && col < map.width && row >= 0 && row < map.height) {
      ++map.hits[static_cast<std::size_t>(row) * static_cast<std::size_t>(map.width) + col];
    }
  }
  return map;
}

/// Binary P5 graymap, row 0 at maximum y. Cells with hits >= threshold
/// render 0 (occupied), cells with some hits below threshold render 205
/// (unknown), untouched cells render 254.
inline std::string to_image(const GridMap& map, std::uint32_t occupied_threshold = 2) {
  if (occupied_threshold < 1) {
    throw std::invalid_argument("to_image: threshold must be >= 1");
  }
  std::string out = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) +
                    "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(map.width) * map.height);
  for (int row = map.height - 1; row >= 0; --row) {
    for (int col = 0; col < map.width; ++col) {
      const std::uint32_t h = map.at(col, row);
      const unsigned char pixel = h >= occupied_threshold ? 0 : (h > 0 ? 205 : 254);
      out.push_back(static_cast<char>(pixel));
    }
  }
  return out;
}

}  // namespace slam2d
