#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "slam2d/errors.hpp"
#include "slam2d/geometry.hpp"
#include "slam2d/scan.hpp"
#include "slam2d/trajectory.hpp"

namespace slam2d {

struct Segment {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
};

/// Line-segment world for the range simulator.
struct World2D {
  std::vector<Segment> segments;
};

struct SimConfig {
  double angle_min = -kPi;
  double angle_increment = 2.0 * kPi / 360.0;
  int count = 360;  // beams per scan
  double range_min = 0.05;
  double range_max = 12.0;
  double range_noise_sigma = 0.0;  // metres, additive Gaussian
  double scan_hz = 10.0;
  std::uint32_t seed = 1;
};

namespace detail {

/// Distance along the ray (origin, unit dir) to the segment, if any.
inline double ray_segment_distance(const Eigen::Vector2d& origin, const Eigen::Vector2d& dir,
                                   const Segment& seg) {
  const Eigen::Vector2d e = seg.b - seg.a;
  const double denom = dir.x() * e.y() - dir.y() * e.x();
  if (std::abs(denom) < 1e-15) {
    return std::numeric_limits<double>::infinity();  // parallel, no hit
  }
  const Eigen::Vector2d w = seg.a - origin;
  const double s = (w.x() * e.y() - w.y() * e.x()) / denom;
  const double u = (w.x() * dir.y() - w.y() * dir.x()) / denom;
  if (s < 0.0 || u < 0.0 || u > 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  return s;
}

}  // namespace detail

/// One simulated revolution from `pose`. Beams that miss every segment or
/// whose true distance falls outside [range_min, range_max] read NaN; hits
/// get additive Gaussian range noise from `rng`.
inline LaserScan raycast(const World2D& world, const Pose2& pose, const SimConfig& cfg,
                         std::mt19937& rng) {
  LaserScan scan;
  scan.angle_min = cfg.angle_min;
  scan.angle_increment = cfg.angle_increment;
  scan.range_min = cfg.range_min;
  scan.range_max = cfg.range_max;
  scan.ranges.resize(static_cast<std::size_t>(cfg.count));
  std::normal_distribution<double> noise(0.0, cfg.range_noise_sigma);
  const Eigen::Vector2d origin = pose.translation();
  for (int i = 0; i < cfg.count; ++i) {
    const double angle = pose.theta() + cfg.angle_min + i * cfg.angle_increment;
    const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
    double dist = std::numeric_limits<double>::infinity();
    for (const Segment& seg : world.segments) {
      dist = std::min(dist, detail::ray_segment_distance(origin, dir, seg));
    }
    if (!std::isfinite(dist) || dist < cfg.range_min || dist > cfg.range_max) {
      scan.ranges[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    scan.ranges[i] = cfg.range_noise_sigma > 0.0 ? dist + noise(rng) : dist;
  }
  return scan;
}

inline LaserScan raycast(const World2D& world, const Pose2& pose, const SimConfig& cfg) {
  std::mt19937 rng(cfg.seed);
  return raycast(world, pose, cfg, rng);
}

/// Pose at time t along the waypoint polyline: linear in translation,
/// shortest arc in heading.
inline Pose2 interpolate_pose(const Trajectory& waypoints, double t) {
  if (waypoints.empty()) {
    throw BadWaypoints("interpolate_pose: no waypoints");
  }
  if (t <= waypoints.front().t) return waypoints.front().pose;
  if (t >= waypoints.back().t) return waypoints.back().pose;
  std::size_t hi = 1;
  while (waypoints[hi].t < t) ++hi;
  const StampedPose& w0 = waypoints[hi - 1];
  const StampedPose& w1 = waypoints[hi];
  const double alpha = (t - w0.t) / (w1.t - w0.t);
  const double dtheta = wrap_angle(w1.pose.theta() - w0.pose.theta());
  return {w0.pose.x() + alpha * (w1.pose.x() - w0.pose.x()),
          w0.pose.y() + alpha * (w1.pose.y() - w0.pose.y()), w0.pose.theta() + alpha * dtheta};
}

struct Dataset {
  std::vector<LaserScan> scans;
  Trajectory ground_truth;  // noise-free interpolated poses
};

/// Samples the waypoint path at scan_hz (both endpoints included) and
/// raycasts one scan per tick. Range noise is the only noise source; the
/// ground truth is exact.
inline Dataset generate_dataset(const World2D& world, const Trajectory& waypoints,
                                const SimConfig& cfg) {
  if (waypoints.empty()) {
    throw BadWaypoints("generate_dataset: no waypoints");
  }
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (!(waypoints[i].t > waypoints[i - 1].t)) {
      throw BadWaypoints("generate_dataset: waypoint timestamps must increase");
    }
  }
  std::mt19937 rng(cfg.seed);
  Dataset out;
  const double t0 = waypoints.front().t;
  const double t_end = waypoints.back().t;
  const double period = 1.0 / cfg.scan_hz;
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * period;
    if (t > t_end + 1e-9) break;
    const Pose2 pose = interpolate_pose(waypoints, t);
    LaserScan scan = raycast(world, pose, cfg, rng);
    scan.t = t;
    out.scans.push_back(std::move(scan));
    out.ground_truth.push_back({t, pose});
  }
  return out;
}

/// Axis-aligned square room centred at the origin.
inline World2D square_room(double half_extent = 2.5) {
  const double h = half_extent;
  World2D w;
  w.segments = {{{-h, -h}, {h, -h}}, {{h, -h}, {h, h}}, {{h, h}, {-h, h}}, {{-h, h}, {-h, -h}}};
  return w;
}

struct ScenarioPreset {
  std::string name;
  World2D world;
  Trajectory waypoints;
  SimConfig config;
};

inline std::vector<std::string> preset_names() {
  return {"square_loop", "fast_loop", "aggressive_rotation", "slow_patrol"};
}

/// Canned scenarios in a 5 m x 5 m room: a walked square loop with
/// heading-along-travel and in-place corner turns. The four variants cover
/// slow/long, fast/short, rotation-heavy and slow/longest regimes.
inline ScenarioPreset make_preset(const std::string& name) {
  ScenarioPreset preset;
  preset.name = name;
  preset.world = square_room(2.5);
  preset.config.range_noise_sigma = 0.01;

  // square loop: corners at +-half, headings along the direction of travel
  const auto loop = [](double half, double leg, double turn,
                       const std::vector<double>& spin_headings) {
    const std::vector<Eigen::Vector2d> corners = {
        {-half, -half}, {half, -half}, {half, half}, {-half, half}};
    Trajectory wp;
    double t = 0.0;
    const double headings[4] = {0.0, kPi / 2.0, kPi, -kPi / 2.0};
    wp.push_back({t, Pose2(corners[0].x(), corners[0].y(), headings[0])});
    for (int leg_i = 0; leg_i < 4; ++leg_i) {
      const Eigen::Vector2d& dst = corners[(leg_i + 1) % 4];
      t += leg;
      wp.push_back({t, Pose2(dst.x(), dst.y(), headings[leg_i])});
      // in-place turn to the next heading, via intermediate headings when
      // the spin exceeds a half turn
      const double spin_step = turn / static_cast<double>(spin_headings.size() + 1);
      double heading = headings[leg_i];
      for (double mid : spin_headings) {
        t += spin_step;
        heading = wrap_angle(heading + mid);
        wp.push_back({t, Pose2(dst.x(), dst.y(), heading)});
      }
      t += spin_step;
      wp.push_back({t, Pose2(dst.x(), dst.y(), headings[(leg_i + 1) % 4])});
    }
    return wp;
  };

  if (name == "square_loop") {
    // 34.5 s, 5.3 m
    preset.waypoints = loop(0.6625, 7.125, 1.5, {});
  } else if (name == "fast_loop") {
    // 14.4 s, 5.0 m
    preset.waypoints = loop(0.625, 2.8, 0.8, {});
  } else if (name == "aggressive_rotation") {
    // 22.4 s, 5.0 m; corners are taken as 270 degree spins the long way
    preset.waypoints = loop(0.625, 3.6, 2.0, {-3.0 * kPi / 4.0});
  } else if (name == "slow_patrol") {
    // 44.3 s, 5.2 m
    preset.waypoints = loop(0.65, 9.075, 2.0, {});
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return preset;
}

}  // namespace slam2d
