#pragma once

#include "rslam/coarse_reg.hpp"
#include "rslam/direct_reg.hpp"
#include "rslam/odometry.hpp"
#include "rslam/place_recognition.hpp"
#include "rslam/pose_graph.hpp"
#include "rslam/scan.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace rslam {

struct PipelineParams {
  OdometryParams odometry;
  PlaceRecognitionParams place;
  CoarseRegParams coarse;
  RegistrationParams fine;  // direct registration between keyframe snapshots
  PoseGraphParams graph;

  int keyframe_stride = 4;  // serial mode; threaded mode gates on worker availability
  bool threaded = false;
  bool optimize_per_loop = true;    // serial mode: solve after every accepted loop
  bool coarse_only = false;         // accept loops from the feature stage, skip refinement
  double loop_covariance_scale = 0.5;  // loop covariance = this * odometry covariance

  // Extra perturbation composed onto every odometry relative pose; exercises
  // the correction machinery with controlled drift.
  Eigen::Vector3d inject_odometry_noise {0.0, 0.0, 0.0};
  std::uint64_t inject_noise_seed = 0;
};

struct LoopEvent {
  int query_frame = 0;
  int match_frame = 0;
  double descriptor_score = 0.0;
  bool coarse_valid = false;
  int coarse_inliers = 0;
  int coarse_matches = 0;
  double coarse_scale = 1.0;
  bool accepted = false;        // passed the direct-registration gate
  double fine_scaled = 0.0;
  Pose2 relative = Pose2::identity();  // query-frame points into match-frame coords
};

// Wall-clock seconds spent in each stage, summed over the run.
struct StageTiming {
  double odometry = 0.0;    // rasterize + register + map update
  double keyframing = 0.0;  // map snapshot + descriptor
  double retrieval = 0.0;   // database query
  double coarse = 0.0;      // features + robust fit
  double fine = 0.0;        // direct registration
  double solve = 0.0;       // graph optimization
};

struct RunReport {
  Trajectory odometry;   // raw odometry poses
  Trajectory optimized;  // graph estimate (same stamps)
  std::vector<LoopEvent> loops;
  std::vector<int> keyframe_frames;
  double travel_distance = 0.0;
  std::vector<double> final_loop_weights;
  std::vector<double> biases;  // per odometry edge, if estimated
  GraphData graph;
  StageTiming timing;
  int solve_count = 0;

  int loops_closed() const;
};

RunReport run_slam(const std::vector<PolarScan>& scans, const std::vector<GyroSample>& gyro,
                   const PipelineParams& params);

}  // namespace rslam
