#pragma once

#include "rslam/grid.hpp"
#include "rslam/se2.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace rslam {

struct RadonParams {
  int n_angles = 120;  // projection angles over [0, pi)
  int n_offsets = 0;   // unit-pixel offsets per projection; 0 means the image size
};

// Sinogram of a square image about its center pixel: row k integrates along
// lines at angle pi * k / n_angles, one column per signed pixel offset.
// Rotating the image circularly shifts the rows (up to an offset mirror at
// the pi wrap).
Grid radon_sinogram(const Grid& image, const RadonParams& params = {});

struct DescriptorParams {
  RadonParams radon;
  int keep_bins = 64;  // lowest positive-frequency magnitudes kept per angle
};

// Row-wise FFT magnitude of the sinogram, truncated to the lowest bins.
// Translating the image leaves the descriptor unchanged; rotating it
// circularly shifts the rows.
Eigen::MatrixXd radon_descriptor(const Grid& image, const DescriptorParams& params = {});

struct DescriptorMatch {
  double score = 0.0;     // peak normalized cross-correlation, in [-1, 1]
  int shift = 0;          // row shift of b that aligns it with a
  double rotation = 0.0;  // rad, rotation of b's image relative to a's
};

DescriptorMatch match_descriptors(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct Keyframe {
  int id = 0;           // database index, assigned on add
  int frame_index = 0;  // odometry frame this keyframe snapshots
  double stamp = 0.0;
  Pose2 odom_pose = Pose2::identity();
  double travel_distance = 0.0;  // cumulative odometry path length
  Grid map_snapshot;
  double map_resolution = 1.0;
  Eigen::MatrixXd descriptor;
};

struct PlaceRecognitionParams {
  DescriptorParams descriptor;
  double min_travel_separation = 50.0;  // m of path between query and candidate
  double base_radius = 20.0;            // m
  double radius_growth = 0.01;          // extra radius per meter of travel difference
};

struct LoopCandidate {
  int query_id = 0;
  int match_id = 0;
  double score = 0.0;
  double rotation = 0.0;
};

// Keyframe store with position-gated descriptor retrieval. The search radius
// grows with the travel-distance gap to track accumulated drift; the best
// score wins with no threshold, ties keeping the oldest keyframe.
class KeyframeDatabase {
 public:
  explicit KeyframeDatabase(const PlaceRecognitionParams& params) : params_(params) {}

  int add(Keyframe kf);
  std::optional<LoopCandidate> query(int query_id) const;

  const Keyframe& keyframe(int id) const { return frames_.at(static_cast<size_t>(id)); }
  int size() const { return static_cast<int>(frames_.size()); }
  const PlaceRecognitionParams& params() const { return params_; }

 private:
  PlaceRecognitionParams params_;
  std::vector<Keyframe> frames_;
};

}  // namespace rslam
