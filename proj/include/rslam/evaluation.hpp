#pragma once

#include "rslam/scan.hpp"
#include "rslam/se2.hpp"

#include <string>
#include <utility>
#include <vector>

namespace rslam {

// For each estimate sample, index of the nearest-in-time reference sample,
// kept only when the stamp gap is at most max_dt. Pairs are
// (reference index, estimate index), ordered by estimate index.
std::vector<std::pair<int, int>> associate_by_stamp(const Trajectory& reference,
                                                    const Trajectory& estimate, double max_dt);

struct AteResult {
  double rmse = 0.0;
  Pose2 alignment = Pose2::identity();  // rigid map applied to estimate positions
  int matched = 0;
};

// Root-mean-square position error after the best rigid alignment of the
// estimate onto the reference (SVD with reflection guard). Throws
// std::invalid_argument with fewer than two associated pairs.
AteResult absolute_trajectory_error(const Trajectory& reference, const Trajectory& estimate,
                                    double max_dt);

// Norm of the translational gap between the ground-truth end-to-end motion
// and the estimated end-to-end motion, over the first and last associated
// pairs.
double end_point_error(const Trajectory& reference, const Trajectory& estimate, double max_dt);

struct RegistrationStats {
  int total = 0;
  int inliers = 0;
  double inlier_ratio = 0.0;
  double rmse_pos = 0.0;  // over inliers, m
  double rmse_rot = 0.0;  // over inliers, rad
};

// Compares estimated relative poses against ground truth; a pair is an
// inlier when both the position and rotation gaps are inside the tolerances.
RegistrationStats registration_stats(const std::vector<Pose2>& estimated,
                                     const std::vector<Pose2>& truth, double pos_tol = 1.5,
                                     double rot_tol = 1.0 * kPi / 180.0);

// Overlaid trajectory polylines, auto-scaled, with a small legend.
void write_trajectory_svg(const std::string& path,
                          const std::vector<std::pair<std::string, Trajectory>>& named,
                          int width_px = 900);

}  // namespace rslam
