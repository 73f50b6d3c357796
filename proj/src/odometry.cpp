#include "rslam/odometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rslam {

Odometry::Odometry(const OdometryParams& params)
    : params_(params), map_(params.map, Pose2::identity()) {}

void Odometry::add_gyro(const GyroSample& sample) {
  if (!gyro_.empty() && sample.stamp < gyro_.back().stamp)
    throw std::invalid_argument("gyro stamps must be non-decreasing");
  gyro_.push_back(sample);
}

void Odometry::add_gyro(const std::vector<GyroSample>& samples) {
  for (const GyroSample& s : samples) add_gyro(s);
}

double Odometry::integrate_gyro(double t0, double t1) const {
  if (gyro_.empty() || t1 <= t0) return 0.0;
  const auto omega_at = [this](double t) -> double {
    const auto it = std::lower_bound(gyro_.begin(), gyro_.end(), t,
                                     [](const GyroSample& s, double v) { return s.stamp < v; });
    if (it == gyro_.begin()) return it->omega;
    if (it == gyro_.end()) return std::prev(it)->omega;
    const auto lo = std::prev(it);
    const double span = it->stamp - lo->stamp;
    if (span < 1e-12) return it->omega;
    const double w = (t - lo->stamp) / span;
    return lo->omega + w * (it->omega - lo->omega);
  };

  double total = 0.0;
  double prev_t = t0;
  double prev_w = omega_at(t0);
  auto it = std::upper_bound(gyro_.begin(), gyro_.end(), t0,
                             [](double v, const GyroSample& s) { return v < s.stamp; });
  for (; it != gyro_.end() && it->stamp < t1; ++it) {
    total += 0.5 * (prev_w + it->omega) * (it->stamp - prev_t);
    prev_t = it->stamp;
    prev_w = it->omega;
  }
  total += 0.5 * (prev_w + omega_at(t1)) * (t1 - prev_t);
  return total;
}

void Odometry::update_stop_detection(double stamp) {
  while (recent_.size() > 1 && recent_[1].stamp <= stamp - params_.stop_window)
    recent_.pop_front();
  if (recent_.front().stamp > stamp - params_.stop_window + 1e-9) return;

  const Eigen::Vector2d cur = recent_.back().pose.translation();
  double moved = 0.0;
  for (const TrajectorySample& s : recent_)
    moved = std::max(moved, (s.pose.translation() - cur).norm());
  if (moved >= params_.stop_translation) return;

  const double t0 = stamp - params_.stop_window;
  bias_ = integrate_gyro(t0, stamp) / params_.stop_window;
  bias_observed_ = true;
}

OdometryFrame Odometry::process(const PolarScan& scan) {
  OdometryFrame frame;
  frame.index = frame_count_;
  frame.stamp = scan.stamp;
  frame.information = params_.information.asDiagonal();

  const int size = params_.map.size_px;
  const double res = params_.map.resolution;

  if (frame_count_ == 0) {
    map_.integrate(polar_to_cartesian(scan, size, res), scan.max_range());
    last_stamp_ = scan.stamp;
    frame_count_ = 1;
    recent_.push_back({scan.stamp, pose_});
    return frame;
  }
  if (scan.stamp <= last_stamp_) throw std::invalid_argument("scan stamps must increase");
  const double dt = scan.stamp - last_stamp_;

  Pose2 pred = last_relative_;  // constant velocity over a uniform scan period
  frame.bias_used = (params_.subtract_bias && bias_observed_) ? bias_ : 0.0;
  frame.gyro_rotation = integrate_gyro(last_stamp_, scan.stamp) - frame.bias_used * dt;
  if (params_.use_gyro && !gyro_.empty()) pred.theta = wrap_angle(frame.gyro_rotation);

  Grid raster;
  if (params_.deskew) {
    const Twist2 twist{pred.x / dt, pred.y / dt, pred.theta / dt};
    raster = polar_to_cartesian_deskewed(scan, size, res, twist);
  } else {
    raster = polar_to_cartesian(scan, size, res);
  }

  RefineParams refine = params_.refine;
  refine.lock_rotation = !params_.refine_rotation;
  const RefineResult reg = refine_registration(map_.grid(), raster, res, pred, refine);

  frame.scaled_score = reg.scaled;
  if (!reg.converged && reg.scaled < params_.min_scaled_score) {
    frame.diverged = true;
    frame.relative = pred;  // fall back to the prediction
    frame.information *= params_.diverged_information_scale;
  } else {
    frame.relative = reg.pose;
  }

  pose_ = compose(pose_, frame.relative);
  frame.pose = pose_;
  last_relative_ = frame.relative;
  last_stamp_ = scan.stamp;
  ++frame_count_;

  map_.recenter(pose_);
  map_.integrate(raster, scan.max_range());

  recent_.push_back({scan.stamp, pose_});
  update_stop_detection(scan.stamp);
  return frame;
}

}  // namespace rslam
