#pragma once

#include <Eigen/Core>

#include <cmath>

namespace rslam {

inline constexpr double kPi = 3.14159265358979323846;

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a > kPi) a -= 2.0 * kPi;
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

inline Eigen::Matrix2d rotation2d(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

// d/dtheta of rotation2d.
inline Eigen::Matrix2d rotation2d_deriv(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d r;
  r << -s, -c, c, -s;
  return r;
}

// Rigid transform on the plane, stored as (x, y, theta).
// theta is kept in (-pi, pi] by every constructor and composition.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  static Pose2 identity() { return {}; }

  Eigen::Vector2d translation() const { return {x, y}; }
  Eigen::Matrix2d rotation() const { return rotation2d(theta); }
};

// x-y-theta increment; also used as the relative-pose residual vector.
struct Twist2 {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;

  Eigen::Vector3d vec() const { return {dx, dy, dtheta}; }
};

inline Pose2 compose(const Pose2& a, const Pose2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return Pose2(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.theta + b.theta);
}

inline Pose2 inverse(const Pose2& a) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return Pose2(-c * a.x - s * a.y, s * a.x - c * a.y, -a.theta);
}

// a^{-1} * b: the pose of b expressed in a's frame.
inline Pose2 between(const Pose2& a, const Pose2& b) { return compose(inverse(a), b); }

// Coordinate reading of a pose. The graph residuals use this chart directly
// instead of the SE(2) exponential-map logarithm.
inline Twist2 log_xytheta(const Pose2& a) { return {a.x, a.y, a.theta}; }

inline Eigen::Vector2d transform_point(const Pose2& a, const Eigen::Vector2d& p) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return {a.x + c * p.x() - s * p.y(), a.y + s * p.x() + c * p.y()};
}

}  // namespace rslam
