#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "slam2d/errors.hpp"
#include "slam2d/geometry.hpp"
#include "slam2d/trajectory.hpp"

namespace slam2d {

/// Absolute pose error statistics over the translational component.
/// Rotational RMSE is tracked separately and is not part of the headline
/// numbers.
struct ApeResult {
  std::vector<double> errors;  // per-pair translational norm, metres
  double rmse = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double rot_rmse = 0.0;  // radians
  std::size_t num_pairs = 0;
};

struct TrajStats {
  double duration = 0.0;        // seconds
  double total_distance = 0.0;  // metres
  double avg_velocity = 0.0;    // metres/second
};

/// Greedy nearest-timestamp matching: every pose is used at most once and
/// pairs farther apart than max_dt are discarded. Returned as
/// (ref index, est index), ordered by est time.
inline std::vector<std::pair<std::size_t, std::size_t>> associate(const Trajectory& ref,
                                                                  const Trajectory& est,
                                                                  double max_dt) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t j = 0;
  for (std::size_t i = 0; i < est.size() && j < ref.size(); ++i) {
    while (j + 1 < ref.size() &&
           std::abs(ref[j + 1].t - est[i].t) < std::abs(ref[j].t - est[i].t)) {
      ++j;
    }
    if (std::abs(ref[j].t - est[i].t) <= max_dt) {
      pairs.emplace_back(j, i);
      ++j;
    }
  }
  if (pairs.empty()) {
    throw NoMatches("associate: no timestamp pairs within max_dt");
  }
  return pairs;
}

/// Keeps the first pose, then each next pose at least 1/hz after the last
/// kept one.
inline Trajectory downsample(const Trajectory& traj, double hz) {
  if (traj.empty()) return {};
  const double period = 1.0 / hz;
  Trajectory out;
  out.push_back(traj.front());
  for (const StampedPose& sp : traj) {
    if (sp.t >= out.back().t + period) {
      out.push_back(sp);
    }
  }
  return out;
}

/// Closed-form SE(2) transform G minimizing sum ||t_ref - G * t_est||^2 over
/// the paired translations (rotation from the 2D cross-covariance angle,
/// translation from the centroids, no scale).
inline Pose2 align(const Trajectory& ref, const Trajectory& est,
                   const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  const double n = static_cast<double>(pairs.size());
  Eigen::Vector2d mean_ref = Eigen::Vector2d::Zero(), mean_est = Eigen::Vector2d::Zero();
  for (const auto& [ri, ei] : pairs) {
    mean_ref += ref[ri].pose.translation();
    mean_est += est[ei].pose.translation();
  }
  mean_ref /= n;
  mean_est /= n;
  double sc = 0.0, ss = 0.0, spread = 0.0;
  for (const auto& [ri, ei] : pairs) {
    const Eigen::Vector2d a = est[ei].pose.translation() - mean_est;
    const Eigen::Vector2d b = ref[ri].pose.translation() - mean_ref;
    sc += a.dot(b);
    ss += a.x() * b.y() - a.y() * b.x();
    spread += a.squaredNorm();
  }
  if (!(spread > 1e-18)) {
    throw DegenerateAlignment("align: estimated translations coincide");
  }
  const double angle = std::atan2(ss, sc);
  const Eigen::Vector2d t =
      mean_ref - Eigen::Rotation2D<double>(angle).toRotationMatrix() * mean_est;
  return {t.x(), t.y(), angle};
}

struct ApeOptions {
  bool align = false;
  double hz = 10.0;      // downsample rate applied to both trajectories
  double max_dt = 0.02;  // association threshold, seconds
};

/// Absolute pose error: downsample both trajectories, associate by
/// timestamp, optionally align the estimate, then per pair take
/// E_i = between(P_ref, P_est) and aggregate the translational norms.
inline ApeResult ape(const Trajectory& ref, const Trajectory& est, const ApeOptions& opts = {}) {
  const Trajectory ref_d = downsample(ref, opts.hz);
  Trajectory est_d = downsample(est, opts.hz);
  const auto pairs = associate(ref_d, est_d, opts.max_dt);
  if (opts.align) {
    const Pose2 g = align(ref_d, est_d, pairs);
    for (StampedPose& sp : est_d) {
      sp.pose = compose(g, sp.pose);
    }
  }
  ApeResult res;
  res.errors.reserve(pairs.size());
  double sq_sum = 0.0, sum = 0.0, rot_sq_sum = 0.0;
  for (const auto& [ri, ei] : pairs) {
    const Pose2 e = between(ref_d[ri].pose, est_d[ei].pose);
    const double err = std::hypot(e.x(), e.y());
    res.errors.push_back(err);
    sq_sum += err * err;
    sum += err;
    rot_sq_sum += e.theta() * e.theta();
    res.max = std::max(res.max, err);
  }
  res.num_pairs = pairs.size();
  const double n = static_cast<double>(pairs.size());
  res.rmse = std::sqrt(sq_sum / n);
  res.mean = sum / n;
  res.rot_rmse = std::sqrt(rot_sq_sum / n);
  std::vector<double> sorted = res.errors;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  res.median = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  return res;
}

/// Duration, path length and average velocity of a trajectory.
inline TrajStats traj_stats(const Trajectory& traj) {
  if (traj.size() < 2) {
    throw TooShort("traj_stats: need at least two poses");
  }
  TrajStats stats;
  stats.duration = traj.back().t - traj.front().t;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    stats.total_distance +=
        (traj[i].pose.translation() - traj[i - 1].pose.translation()).norm();
  }
  stats.avg_velocity = stats.total_distance / stats.duration;
  return stats;
}

}  // namespace slam2d
