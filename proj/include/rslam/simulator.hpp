#pragma once

#include "rslam/scan.hpp"
#include "rslam/se2.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

namespace rslam {

struct Reflector {
  Eigen::Vector2d position {0.0, 0.0};  // m, world frame
  double reflectivity = 1.0;            // [0, 1]
};

// Moves along a straight line: position(t) = start + velocity * t.
struct DynamicReflector {
  Eigen::Vector2d start {0.0, 0.0};
  Eigen::Vector2d velocity {0.0, 0.0};  // m/s
  double reflectivity = 1.0;
};

struct World {
  double extent = 150.0;  // all reflectors within [-extent, extent]^2
  std::vector<Reflector> reflectors;
  std::vector<DynamicReflector> dynamic_reflectors;

  // Throws std::invalid_argument on reflectivity outside [0,1] or a static
  // reflector outside the extent.
  void validate() const;
};

struct WorldGenOptions {
  double extent = 150.0;
  int clusters = 12;
  int per_cluster = 20;
  double cluster_sigma = 6.0;
  int scattered = 40;
  double min_reflectivity = 0.3;
};

// Clustered random reflector layout; clusters give maps distinctive local
// constellations for feature matching.
World generate_world(uint64_t seed, const WorldGenOptions& opts = {});

struct RenderParams {
  int azimuths = 400;
  int range_bins = 512;
  double range_resolution = 0.5;  // m per bin
  double scan_duration = 0.25;    // s; 0 renders a snapshot from the scan-start pose
  double beam_sigma = 0.009;      // rad, Gaussian azimuth spread of one reflector
  double range_sigma = 0.6;       // m, Gaussian range spread
  double noise_floor_mean = 0.02;
  double noise_floor_sigma = 0.01;
  double attenuation_knee = 80.0;  // m; returns fall off beyond this range
  double attenuation_exponent = 2.0;
  std::uint64_t noise_seed = 0;
};

using PoseAtTime = std::function<Pose2(double)>;

// Renders one revolution. Each azimuth row is rendered from the sensor pose at
// that row's timestamp, so platform motion during the sweep distorts the scan.
// Throws std::invalid_argument on negative scan duration or non-positive
// resolution/geometry.
PolarScan render_scan(const World& world, const PoseAtTime& sensor_pose, double scan_start,
                      const RenderParams& params);

struct StopEvent {
  int waypoint_index = 0;  // platform dwells at this waypoint
  double duration = 0.0;   // s
};

// C1 path through waypoint positions (Catmull-Rom), traversed at constant
// speed with cosine speed ramps around optional stops. A closed loop is
// detected when the first and last waypoints coincide.
class SmoothTrajectory {
 public:
  SmoothTrajectory(const std::vector<Pose2>& waypoints, double speed,
                   std::vector<StopEvent> stops = {}, double ramp_time = 2.0);

  Pose2 pose(double t) const;       // clamped to [0, duration]
  double yaw_rate(double t) const;  // rad/s
  double duration() const { return duration_; }
  double path_length() const { return total_length_; }
  double arc_position(double t) const;  // distance travelled at time t

 private:
  struct ProfilePiece {
    double t0, t1;      // time span
    double s0;          // arc position at t0
    double speed0;      // speed entering the piece
    int kind;           // 0 cruise, 1 ramp down, 2 dwell, 3 ramp up
  };

  Eigen::Vector2d position_at_u(double u) const;  // u in [0, n_segments]
  Eigen::Vector2d tangent_at_u(double u) const;
  double u_of_arc(double s) const;

  std::vector<Eigen::Vector2d> points_;
  bool closed_ = false;
  std::vector<double> table_u_, table_s_;  // dense arc-length table
  double total_length_ = 0.0;
  double speed_ = 1.0;
  double ramp_time_ = 2.0;
  std::vector<ProfilePiece> profile_;
  double duration_ = 0.0;
};

struct SequenceOptions {
  RenderParams render;
  double speed = 10.0;        // m/s
  double scan_period = 0.25;  // s between scan starts
  double gyro_rate = 100.0;   // Hz
  double gyro_bias = 0.0;     // rad/s, constant
  double gyro_noise_sigma = 0.001;  // rad/s
  Eigen::Vector3d odom_noise_sigma {0.0, 0.0, 0.0};  // seed-odometry perturbation (m, m, rad)
  std::vector<StopEvent> stops;
  double ramp_time = 2.0;
  std::uint64_t seed = 1;
};

struct SimulatedSequence {
  std::vector<PolarScan> scans;
  std::vector<GyroSample> gyro;
  Trajectory ground_truth;               // pose at each scan start
  std::vector<Pose2> seed_odometry;      // element m: ground-truth motion scan m -> m+1, perturbed
  double true_gyro_bias = 0.0;
  double path_length = 0.0;
};

// Deterministic given opts.seed.
SimulatedSequence simulate_sequence(const World& world, const std::vector<Pose2>& waypoints,
                                    const SequenceOptions& opts);

}  // namespace rslam
