#pragma once

#include "rslam/grid.hpp"
#include "rslam/se2.hpp"

namespace rslam {

struct LocalMapParams {
  int size_px = 321;        // odd, center pixel is the map origin
  double resolution = 1.0;  // m per pixel
  double blend = 0.3;       // low-pass factor for new observations
};

// Rolling Cartesian intensity map in the frame of its origin pose. Pixel
// (col, row) covers the map-frame point ((col - c) * res, (row - c) * res)
// with c = size_px / 2, matching the scan rasterizer, so a scan rendered at
// the origin pose aligns with the map pixel for pixel.
class LocalMap {
 public:
  LocalMap(const LocalMapParams& params, const Pose2& origin);

  const Grid& grid() const { return grid_; }
  Grid& grid() { return grid_; }
  const Pose2& origin() const { return origin_; }
  double resolution() const { return params_.resolution; }
  int size_px() const { return params_.size_px; }
  const LocalMapParams& params() const { return params_; }

  // Blends scan_cart into the map: pixels within observed_radius of the
  // center move toward the scan value by the blend factor, pixels outside
  // keep their value. scan_cart must share the map geometry.
  void integrate(const Grid& scan_cart, double observed_radius);

  // Moves the map frame to new_origin, resampling existing content into the
  // new frame. Content leaving the map area is dropped; uncovered area is
  // zero-filled.
  void recenter(const Pose2& new_origin);

  // Bilinear intensity at a map-frame metric point; zero outside.
  double sample(double x, double y) const;

 private:
  LocalMapParams params_;
  Pose2 origin_;
  Grid grid_;
};

}  // namespace rslam
