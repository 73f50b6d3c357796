#pragma once

#include "rslam/direct_reg.hpp"
#include "rslam/local_map.hpp"
#include "rslam/scan.hpp"
#include "rslam/se2.hpp"

#include <Eigen/Core>

#include <deque>
#include <vector>

namespace rslam {

struct OdometryParams {
  LocalMapParams map;
  RefineParams refine;
  double min_scaled_score = 0.5;  // unconverged frames below this count as diverged
  bool use_gyro = true;           // initialize rotation from integrated gyro
  bool refine_rotation = true;    // false keeps the gyro-integrated heading
  bool deskew = true;             // undo in-sweep motion using the predicted twist
  bool subtract_bias = true;      // apply the stop-estimated bias during integration
  double stop_window = 1.0;       // s of history required to declare a stop
  double stop_translation = 0.2;  // m, max estimated movement inside the window; loose enough
                                  // to cover the creep a locked-rotation solve shows under bias
  Eigen::Vector3d information {100.0, 100.0, 1000.0};  // diag, per odometry edge
  double diverged_information_scale = 0.1;
};

struct OdometryFrame {
  int index = 0;
  double stamp = 0.0;
  Pose2 pose = Pose2::identity();      // in the odometry frame (first scan at identity)
  Pose2 relative = Pose2::identity();  // motion from the previous frame
  double scaled_score = 1.0;
  bool diverged = false;
  Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
  double gyro_rotation = 0.0;  // bias-corrected integrated gyro over the frame gap
  double bias_used = 0.0;      // bias estimate applied to this frame's gyro integration
};

// Scan-to-map odometry: each scan is rasterized, de-skewed with the previous
// frame's twist, registered against the rolling local map with a
// constant-velocity initial guess, then blended into the map.
class Odometry {
 public:
  explicit Odometry(const OdometryParams& params);

  // Gyro samples must arrive with non-decreasing stamps, covering scan stamps.
  void add_gyro(const GyroSample& sample);
  void add_gyro(const std::vector<GyroSample>& samples);

  // Scan stamps must be strictly increasing.
  OdometryFrame process(const PolarScan& scan);

  const LocalMap& map() const { return map_; }
  Pose2 pose() const { return pose_; }
  double gyro_bias() const { return bias_; }
  bool bias_observed() const { return bias_observed_; }
  int frame_count() const { return frame_count_; }

 private:
  double integrate_gyro(double t0, double t1) const;  // raw, trapezoidal
  void update_stop_detection(double stamp);

  OdometryParams params_;
  LocalMap map_;
  Pose2 pose_ = Pose2::identity();
  Pose2 last_relative_ = Pose2::identity();
  double last_stamp_ = 0.0;
  int frame_count_ = 0;
  std::vector<GyroSample> gyro_;
  std::deque<TrajectorySample> recent_;  // for stop detection
  double bias_ = 0.0;
  bool bias_observed_ = false;
};

}  // namespace rslam
