#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "slam2d/errors.hpp"
#include "slam2d/geometry.hpp"
#include "slam2d/kdtree.hpp"
#include "slam2d/scan.hpp"

namespace slam2d {

struct MatchConfig {
  double max_corr_dist = 1.0;  // metres; pairs beyond this are rejected
  int max_iterations = 50;
  double tol = 1e-6;  // relative change of the mean cost between iterations
};

struct MatchResult {
  /// Transform mapping source-frame coordinates into the target frame.
  Pose2 relative_pose;
  int iterations = 0;
  double final_cost = 0.0;
  bool converged = false;
  int num_correspondences = 0;
};

/// Replaces each point's neighbourhood covariance (k nearest neighbours,
/// including the point itself) by its eigenvalue-regularized form: the major
/// eigenvalue becomes 1, the minor becomes epsilon, eigenvectors are kept.
/// The planar analogue of GICP's surface regularization.
inline PointCloud2 estimate_covariances(const PointCloud2& cloud, int k = 20,
                                        double epsilon = 1e-3) {
  if (cloud.points.empty()) {
    throw EmptyCloud("estimate_covariances: empty cloud");
  }
  const int n = static_cast<int>(cloud.points.size());
  const int kk = std::max(2, std::min(k, n));
  KdTree2 tree(cloud.points);

  PointCloud2 out;
  out.points = cloud.points;
  out.covs.resize(cloud.points.size());
  for (int i = 0; i < n; ++i) {
    const std::vector<int> nbrs = tree.knearest(cloud.points[i], kk);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (int j : nbrs) mean += cloud.points[j];
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (int j : nbrs) {
      const Eigen::Vector2d d = cloud.points[j] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(nbrs.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const Eigen::Matrix2d v = eig.eigenvectors();  // columns, ascending eigenvalues
    out.covs[i] = v.col(1) * v.col(1).transpose() + epsilon * v.col(0) * v.col(0).transpose();
  }
  return out;
}

namespace detail {

struct Corr {
  int src;
  int tgt;
};

inline std::vector<Corr> correspondences(const PointCloud2& source, const KdTree2& target,
                                         const Pose2& transform, double max_dist) {
  std::vector<Corr> out;
  out.reserve(source.points.size());
  for (std::size_t i = 0; i < source.points.size(); ++i) {
    const Eigen::Vector2d p = transform_point(transform, source.points[i]);
    const auto [j, dist] = target.nearest(p);
    if (j >= 0 && dist <= max_dist) {
      out.push_back({static_cast<int>(i), j});
    }
  }
  return out;
}

inline double mean_point_cost(const PointCloud2& source, const PointCloud2& target,
                              const std::vector<Corr>& corr, const Pose2& transform) {
  double cost = 0.0;
  for (const Corr& c : corr) {
    cost += (target.points[c.tgt] - transform_point(transform, source.points[c.src])).squaredNorm();
  }
  return cost / static_cast<double>(corr.size());
}

// 2x2 inverse of the combined covariance C_b + R C_a R^T.
inline Eigen::Matrix2d combined_information(const Eigen::Matrix2d& cov_src,
                                            const Eigen::Matrix2d& cov_tgt,
                                            const Eigen::Matrix2d& rot) {
  const Eigen::Matrix2d m = cov_tgt + rot * cov_src * rot.transpose();
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) {
    throw SingularInformation("gicp_align: combined covariance is not invertible");
  }
  Eigen::Matrix2d inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv / det;
}

inline double mean_mahalanobis_cost(const PointCloud2& source, const PointCloud2& target,
                                    const std::vector<Corr>& corr, const Pose2& transform) {
  const Eigen::Matrix2d rot = transform.rotation();
  double cost = 0.0;
  for (const Corr& c : corr) {
    const Eigen::Vector2d d =
        target.points[c.tgt] - transform_point(transform, source.points[c.src]);
    cost += d.dot(combined_information(source.covs[c.src], target.covs[c.tgt], rot) * d);
  }
  return cost / static_cast<double>(corr.size());
}

inline bool cost_converged(double prev, double cost, double tol) {
  return std::isfinite(prev) && std::abs(prev - cost) < tol * std::max(prev, 1e-12);
}

}  // namespace detail

/// Classic point-to-point ICP: correspond under the current transform via
/// nearest neighbour, reject pairs beyond max_corr_dist, refit the rigid
/// transform in closed form, repeat until the mean squared correspondence
/// distance stops changing.
inline MatchResult icp_point_to_point(const PointCloud2& source, const PointCloud2& target,
                                      const Pose2& init, const MatchConfig& cfg = {}) {
  const KdTree2 tree(target.points);
  Pose2 transform = init;
  MatchResult res;
  double prev = std::numeric_limits<double>::quiet_NaN();
  while (res.iterations < cfg.max_iterations) {
    ++res.iterations;
    const auto corr = detail::correspondences(source, tree, transform, cfg.max_corr_dist);
    if (corr.empty()) {
      throw NoCorrespondences("icp_point_to_point: every pair rejected");
    }
    res.num_correspondences = static_cast<int>(corr.size());
    res.final_cost = detail::mean_point_cost(source, target, corr, transform);
    if (detail::cost_converged(prev, res.final_cost, cfg.tol)) {
      res.converged = true;
      break;
    }
    prev = res.final_cost;

    // weighted Procrustes over the current pairs (uniform weights)
    Eigen::Vector2d mean_src = Eigen::Vector2d::Zero(), mean_tgt = Eigen::Vector2d::Zero();
    for (const auto& c : corr) {
      mean_src += source.points[c.src];
      mean_tgt += target.points[c.tgt];
    }
    mean_src /= static_cast<double>(corr.size());
    mean_tgt /= static_cast<double>(corr.size());
    double sc = 0.0, ss = 0.0;
    for (const auto& c : corr) {
      const Eigen::Vector2d a = source.points[c.src] - mean_src;
      const Eigen::Vector2d b = target.points[c.tgt] - mean_tgt;
      sc += a.dot(b);
      ss += a.x() * b.y() - a.y() * b.x();
    }
    const double angle = std::atan2(ss, sc);
    const Eigen::Rotation2D<double> rot(angle);
    const Eigen::Vector2d t = mean_tgt - rot * mean_src;
    transform = Pose2(t.x(), t.y(), angle);
  }
  res.relative_pose = transform;
  return res;
}

/// Generalized ICP on SE(2): minimizes the distribution-to-distribution cost
///   sum_i d_i^T (C_i^tgt + R C_i^src R^T)^-1 d_i,   d_i = b_i - T(a_i)
/// by Gauss-Newton steps in local coordinates, with the same correspondence
/// and rejection loop as icp_point_to_point. Both clouds must carry
/// per-point covariances (see estimate_covariances).
inline MatchResult gicp_align(const PointCloud2& source, const PointCloud2& target,
                              const Pose2& init, const MatchConfig& cfg = {}) {
  if (!source.has_covs() || !target.has_covs()) {
    throw std::invalid_argument("gicp_align: clouds must carry per-point covariances");
  }
  const KdTree2 tree(target.points);
  Pose2 transform = init;
  MatchResult res;
  double prev = std::numeric_limits<double>::quiet_NaN();
  while (res.iterations < cfg.max_iterations) {
    ++res.iterations;
    const auto corr = detail::correspondences(source, tree, transform, cfg.max_corr_dist);
    if (corr.empty()) {
      throw NoCorrespondences("gicp_align: every pair rejected");
    }
    res.num_correspondences = static_cast<int>(corr.size());
    res.final_cost = detail::mean_mahalanobis_cost(source, target, corr, transform);
    if (detail::cost_converged(prev, res.final_cost, cfg.tol)) {
      res.converged = true;
      break;
    }
    prev = res.final_cost;

    // one Gauss-Newton step: T <- T * exp(xi)
    const Eigen::Matrix2d rot = transform.rotation();
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (const auto& c : corr) {
      const Eigen::Vector2d& a = source.points[c.src];
      const Eigen::Vector2d d = target.points[c.tgt] - transform_point(transform, a);
      const Eigen::Matrix2d info =
          detail::combined_information(source.covs[c.src], target.covs[c.tgt], rot);
      Eigen::Matrix<double, 2, 3> jac;
      jac << 1.0, 0.0, -a.y(), 0.0, 1.0, a.x();
      jac = (-rot * jac).eval();
      h += jac.transpose() * info * jac;
      g += jac.transpose() * info * d;
    }
    const Eigen::Vector3d step = h.ldlt().solve(-g);
    if (!step.allFinite()) {
      break;  // degenerate geometry; report non-convergence
    }
    transform = compose(transform, exp_map(step));
  }
  res.relative_pose = transform;
  return res;
}

}  // namespace slam2d
