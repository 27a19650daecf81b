#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slam2d/errors.hpp"
#include "slam2d/evaluation.hpp"
#include "slam2d/geometry.hpp"
#include "slam2d/pipeline.hpp"
#include "slam2d/scan.hpp"
#include "slam2d/simulator.hpp"
#include "slam2d/trajectory.hpp"

namespace slam2d {

/// Shortest representation that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path + " for reading");
  }
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot open " + path + " for writing");
  }
  return out;
}

inline double parse_double(const std::string& token, const std::string& path, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ParseError(path, line, "not a number: '" + token + "'");
  }
  return v;
}

inline bool skippable(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// scan logs: one JSON object per line, ordered by t; null marks an invalid
// return
// ---------------------------------------------------------------------------

inline void write_scans(const std::string& path, const std::vector<LaserScan>& scans) {
  auto out = detail::open_output(path);
  for (const LaserScan& scan : scans) {
    nlohmann::json j;
    j["t"] = scan.t;
    j["angle_min"] = scan.angle_min;
    j["angle_increment"] = scan.angle_increment;
    j["range_min"] = scan.range_min;
    j["range_max"] = scan.range_max;
    nlohmann::json ranges = nlohmann::json::array();
    for (double r : scan.ranges) {
      if (std::isfinite(r)) {
        ranges.push_back(r);
      } else {
        ranges.push_back(nullptr);
      }
    }
    j["ranges"] = std::move(ranges);
    out << j.dump() << '\n';
  }
}

inline std::vector<LaserScan> load_scans(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<LaserScan> scans;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
    LaserScan scan;
    try {
      scan.t = j.at("t").get<double>();
      scan.angle_min = j.at("angle_min").get<double>();
      scan.angle_increment = j.at("angle_increment").get<double>();
      scan.range_min = j.at("range_min").get<double>();
      scan.range_max = j.at("range_max").get<double>();
      for (const auto& r : j.at("ranges")) {
        scan.ranges.push_back(r.is_null() ? std::nan("") : r.get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
    if (!(scan.angle_increment > 0.0) || !(scan.range_min < scan.range_max) ||
        scan.ranges.size() < 2) {
      throw ParseError(path, line_no, "malformed scan record");
    }
    if (!scans.empty() && !(scan.t > scans.back().t)) {
      throw OrderError(path, line_no, "scan timestamp does not increase");
    }
    scans.push_back(std::move(scan));
  }
  return scans;
}

// ---------------------------------------------------------------------------
// trajectory files: "t x y z qx qy qz qw" per pose, yaw-only quaternion,
// '#' comments permitted
// ---------------------------------------------------------------------------

inline void save_trajectory(const std::string& path, const Trajectory& traj) {
  auto out = detail::open_output(path);
  for (const StampedPose& sp : traj) {
    const double half = sp.pose.theta() / 2.0;
    out << format_double(sp.t) << ' ' << format_double(sp.pose.x()) << ' '
        << format_double(sp.pose.y()) << " 0 0 0 " << format_double(std::sin(half)) << ' '
        << format_double(std::cos(half)) << '\n';
  }
}

inline Trajectory load_trajectory(const std::string& path) {
  auto in = detail::open_input(path);
  Trajectory traj;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    if (tokens.size() != 8) {
      throw ParseError(path, line_no, "expected 8 fields, got " + std::to_string(tokens.size()));
    }
    std::vector<double> v;
    v.reserve(8);
    for (const std::string& token : tokens) {
      v.push_back(detail::parse_double(token, path, line_no));
    }
    const double theta = 2.0 * std::atan2(v[6], v[7]);
    if (!traj.empty() && !(v[0] > traj.back().t)) {
      throw ParseError(path, line_no, "pose timestamp does not increase");
    }
    traj.push_back({v[0], Pose2(v[1], v[2], theta)});
  }
  return traj;
}

// ---------------------------------------------------------------------------
// plain "key = value" config files, keyed by the config struct field names
// ---------------------------------------------------------------------------

inline std::map<std::string, std::string> load_key_values(const std::string& path) {
  auto in = detail::open_input(path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path, line_no, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError(path, line_no, "expected 'key = value'");
    }
    kv[key] = value;
  }
  return kv;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  PipelineConfig cfg;
  for (const auto& [key, value] : load_key_values(path)) {
    const double v = detail::parse_double(value, path, 0);
    if (key == "window") {
      cfg.window = static_cast<int>(v);
    } else if (key == "sigma_xy") {
      cfg.sigma_xy = v;
    } else if (key == "sigma_theta") {
      cfg.sigma_theta = v;
    } else if (key == "prior_sigma") {
      cfg.prior_sigma = v;
    } else if (key == "keyframe_min_translation") {
      cfg.keyframe_min_translation = v;
    } else if (key == "keyframe_min_rotation") {
      cfg.keyframe_min_rotation = v;
    } else if (key == "max_corr_dist") {
      cfg.gicp.max_corr_dist = v;
    } else if (key == "max_iterations") {
      cfg.gicp.max_iterations = static_cast<int>(v);
    } else if (key == "tol") {
      cfg.gicp.tol = v;
    } else if (key == "cov_neighbors") {
      cfg.cov_neighbors = static_cast<int>(v);
    } else {
      throw ParseError(path, 0, "unknown pipeline config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline SimConfig load_sim_config(const std::string& path) {
  SimConfig cfg;
  for (const auto& [key, value] : load_key_values(path)) {
    const double v = detail::parse_double(value, path, 0);
    if (key == "angle_min") {
      cfg.angle_min = v;
    } else if (key == "angle_increment") {
      cfg.angle_increment = v;
    } else if (key == "count") {
      cfg.count = static_cast<int>(v);
    } else if (key == "range_min") {
      cfg.range_min = v;
    } else if (key == "range_max") {
      cfg.range_max = v;
    } else if (key == "range_noise_sigma") {
      cfg.range_noise_sigma = v;
    } else if (key == "scan_hz") {
      cfg.scan_hz = v;
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint32_t>(v);
    } else {
      throw ParseError(path, 0, "unknown sim config key '" + key + "'");
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// worlds and waypoints for the simulator CLI
// ---------------------------------------------------------------------------

/// One segment per line: "x1 y1 x2 y2".
inline World2D load_world(const std::string& path) {
  auto in = detail::open_input(path);
  World2D world;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    std::istringstream ss(line);
    double x1, y1, x2, y2;
    if (!(ss >> x1 >> y1 >> x2 >> y2)) {
      throw ParseError(path, line_no, "expected 'x1 y1 x2 y2'");
    }
    if (x1 == x2 && y1 == y2) {
      throw ParseError(path, line_no, "zero-length segment");
    }
    world.segments.push_back({{x1, y1}, {x2, y2}});
  }
  return world;
}

/// One waypoint per line: "t x y theta".
inline Trajectory load_waypoints(const std::string& path) {
  auto in = detail::open_input(path);
  Trajectory waypoints;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    std::istringstream ss(line);
    double t, x, y, theta;
    if (!(ss >> t >> x >> y >> theta)) {
      throw ParseError(path, line_no, "expected 't x y theta'");
    }
    if (!waypoints.empty() && !(t > waypoints.back().t)) {
      throw ParseError(path, line_no, "waypoint timestamp does not increase");
    }
    waypoints.push_back({t, Pose2(x, y, theta)});
  }
  return waypoints;
}

// ---------------------------------------------------------------------------
// evaluation report
// ---------------------------------------------------------------------------

inline std::string eval_report_json(const ApeResult& res) {
  nlohmann::json j;
  j["rmse"] = res.rmse;
  j["mean"] = res.mean;
  j["median"] = res.median;
  j["max"] = res.max;
  j["rot_rmse"] = res.rot_rmse;
  j["num_pairs"] = res.num_pairs;
  return j.dump();
}

}  // namespace slam2d
