#pragma once

#include <Eigen/Core>

#include <cmath>
#include <utility>

namespace slam2d {

/// Local coordinates (dx, dy, dtheta) around a pose.
using Tangent2 = Eigen::Vector3d;

/// 3x3 covariance over (dx, dy, dtheta).
using Cov3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double theta) {
  theta = std::fmod(theta, 2.0 * kPi);
  if (theta > kPi) {
    theta -= 2.0 * kPi;
  } else if (theta <= -kPi) {
    theta += 2.0 * kPi;
  }
  return theta;
}

/// Planar rigid transform. theta stays in (-pi, pi] through every
/// constructor and operation.
class Pose2 {
 public:
  Pose2() = default;
  Pose2(double x, double y, double theta) : x_(x), y_(y), theta_(wrap_angle(theta)) {}

  static Pose2 identity() { return {}; }

  double x() const { return x_; }
  double y() const { return y_; }
  double theta() const { return theta_; }

  Eigen::Vector2d translation() const { return {x_, y_}; }

  Eigen::Matrix2d rotation() const {
    const double c = std::cos(theta_);
    const double s = std::sin(theta_);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
  }

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double theta_ = 0.0;
};

inline Pose2 inverse(const Pose2& p) {
  const double c = std::cos(p.theta());
  const double s = std::sin(p.theta());
  // R(-theta) * -t
  return {-(c * p.x() + s * p.y()), -(-s * p.x() + c * p.y()), -p.theta()};
}

inline Pose2 compose(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta());
  const double s = std::sin(a.theta());
  return {a.x() + c * b.x() - s * b.y(), a.y() + s * b.x() + c * b.y(), a.theta() + b.theta()};
}

/// Relative pose of b expressed in the frame of a: inverse(a) * b.
inline Pose2 between(const Pose2& a, const Pose2& b) { return compose(inverse(a), b); }

inline Eigen::Vector2d transform_point(const Pose2& p, const Eigen::Vector2d& pt) {
  const double c = std::cos(p.theta());
  const double s = std::sin(p.theta());
  return {p.x() + c * pt.x() - s * pt.y(), p.y() + s * pt.x() + c * pt.y()};
}

// Closed-form series switch for V(theta) and its inverse.
inline constexpr double kSmallAngle = 1e-7;

/// SE(2) exponential map. Rotation is dtheta, translation is V(dtheta)*(dx,dy).
inline Pose2 exp_map(const Tangent2& xi) {
  const double theta = xi.z();
  double a, b;  // V = [[a, b], [-b, a]]
  if (std::abs(theta) < kSmallAngle) {
    a = 1.0 - theta * theta / 6.0;
    b = -theta / 2.0 + theta * theta * theta / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (std::cos(theta) - 1.0) / theta;
  }
  return {a * xi.x() + b * xi.y(), -b * xi.x() + a * xi.y(), theta};
}

/// SE(2) logarithmic map, inverse of exp_map for theta in (-pi, pi).
/// At theta == pi the branch with dtheta == pi is returned.
inline Tangent2 log_map(const Pose2& p) {
  const double theta = p.theta();
  const double half = theta / 2.0;
  double a;  // Vinv = [[a, half], [-half, a]]
  if (std::abs(theta) < kSmallAngle) {
    a = 1.0 - theta * theta / 12.0;
  } else {
    a = half / std::tan(half);
  }
  return {a * p.x() + half * p.y(), -half * p.x() + a * p.y(), theta};
}

/// Adjoint of an SE(2) element: exp(adjoint(p) * xi) == p * exp(xi) * p^-1.
inline Eigen::Matrix3d adjoint(const Pose2& p) {
  const double c = std::cos(p.theta());
  const double s = std::sin(p.theta());
  Eigen::Matrix3d ad;
  ad << c, -s, p.y(), s, c, -p.x(), 0.0, 0.0, 1.0;
  return ad;
}

/// Derivative of delta -> log(exp(xi) * exp(delta)) at delta = 0, i.e. the
/// inverse right Jacobian of the exponential map.
inline Eigen::Matrix3d dexp_inv(const Tangent2& xi) {
  const double theta = xi.z();
  double c;
  if (std::abs(theta) < 1e-2) {
    // series; the closed form cancels catastrophically near zero
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    c = 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  Eigen::Matrix3d ad;
  ad << 0.0, -theta, xi.y(), theta, 0.0, -xi.x(), 0.0, 0.0, 0.0;
  return Eigen::Matrix3d::Identity() + 0.5 * ad + c * ad * ad;
}

/// Derivative of delta -> log(e * exp(delta)) at delta = 0.
inline Eigen::Matrix3d log_jacobian(const Pose2& e) { return dexp_inv(log_map(e)); }

/// Jacobians of between(a * exp(xi_a), b * exp(xi_b)) in the local frame of
/// between(a, b), evaluated at xi = 0:
///   between(a + xi_a, b + xi_b) ~ between(a, b) * exp(Ja xi_a + Jb xi_b).
/// Ja = -adjoint(between(b, a)), Jb = I.
inline std::pair<Eigen::Matrix3d, Eigen::Matrix3d> between_jacobians(const Pose2& a,
                                                                     const Pose2& b) {
  return {-adjoint(between(b, a)), Eigen::Matrix3d::Identity()};
}

}  // namespace slam2d
