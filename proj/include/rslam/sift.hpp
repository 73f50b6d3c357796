#pragma once

#include "rslam/grid.hpp"

#include <array>
#include <vector>

namespace rslam {

struct SiftParams {
  int n_octaves = 0;                 // 0 derives enough octaves for a 16 px top level
  int intervals = 3;                 // scale samples per octave
  double sigma0 = 1.6;               // base blur of the first pyramid level
  double assumed_blur = 0.5;         // blur already present in the input
  bool upsample = true;              // start from a 2x bilinear upscale so blobs
                                     // near one pixel wide still bracket a scale extremum
  double contrast_threshold = 0.01;  // on the max-normalized difference response;
                                     // radar maps are sparse, with real structure
                                     // well below the photographic 0.03 convention
  double edge_ratio = 10.0;          // principal-curvature ratio gate
  int orientation_bins = 36;
  double orientation_peak_ratio = 0.8;  // secondary peaks above this spawn extra keypoints
  double descriptor_clamp = 0.2;
};

struct SiftKeypoint {
  double x = 0.0;  // px in the input image
  double y = 0.0;
  double sigma = 1.0;  // absolute scale
  double angle = 0.0;  // rad
  double response = 0.0;
  std::array<float, 128> descriptor {};  // 4x4 cells x 8 orientations, unit norm
};

// Difference-of-Gaussians blob detector with oriented gradient descriptors.
// The input is max-normalized internally, so absolute intensity scale does
// not affect detections.
std::vector<SiftKeypoint> detect_sift(const Grid& image, const SiftParams& params = {});

struct FeatureMatch {
  int query_idx = 0;
  int train_idx = 0;
  double distance = 0.0;
};

// Brute-force nearest neighbor with Lowe's ratio test; if several query
// features hit one train feature, only the closest pair survives.
std::vector<FeatureMatch> match_features(const std::vector<SiftKeypoint>& query,
                                         const std::vector<SiftKeypoint>& train,
                                         double ratio = 0.8);

}  // namespace rslam
