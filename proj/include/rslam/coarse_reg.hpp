#pragma once

#include "rslam/se2.hpp"
#include "rslam/sift.hpp"

#include <cstdint>
#include <vector>

namespace rslam {

struct RansacParams {
  int max_iters = 2000;
  double inlier_tolerance_px = 3.0;
  int min_inliers = 15;
  double max_scale_deviation = 0.05;  // reject fits with |scale - 1| above this
  std::uint64_t seed = 7;
};

struct CoarseResult {
  bool valid = false;
  Pose2 pose = Pose2::identity();  // m and rad, query frame -> reference frame
  double scale = 1.0;              // similarity scale before it is divided out
  int inliers = 0;
  int n_matches = 0;
  std::vector<int> inlier_indices;  // into the match list
};

// Fits a similarity (scale, rotation, translation) mapping query keypoints
// onto reference keypoints from two-match hypotheses, refits on the inlier
// set, then re-verifies inliers against the refit. Maps are metric and share
// image_size / resolution, with the frame origin at the center pixel; the
// returned pose has the scale divided out. Both physical maps have unit
// scale, so a fitted scale far from one marks a bad association.
CoarseResult ransac_similarity(const std::vector<SiftKeypoint>& query_kps,
                               const std::vector<SiftKeypoint>& reference_kps,
                               const std::vector<FeatureMatch>& matches, int image_size,
                               double resolution, const RansacParams& params = {});

struct CoarseRegParams {
  SiftParams sift;
  double match_ratio = 0.8;
  RansacParams ransac;
};

// Feature pipeline: detect on both rasters, ratio-test match, RANSAC.
CoarseResult coarse_register(const Grid& reference, const Grid& query, double resolution,
                             const CoarseRegParams& params = {});

}  // namespace rslam
