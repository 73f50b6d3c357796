#pragma once

#include "rslam/grid.hpp"
#include "rslam/se2.hpp"

#include <vector>

namespace rslam {

// One radar revolution as an azimuth x range intensity grid.
// Azimuth row k covers sensor-frame angle 2*pi*k/A; row timestamps are strictly
// increasing across the sweep.
struct PolarScan {
  int azimuths = 0;
  int range_bins = 0;
  Grid intensities;                       // azimuths x range_bins (row = azimuth)
  std::vector<double> azimuth_timestamps; // seconds, one per row
  double range_resolution = 0.5;          // m per bin
  double stamp = 0.0;                     // scan start, seconds

  double max_range() const { return range_bins * range_resolution; }
};

struct GyroSample {
  double stamp = 0.0;  // seconds
  double omega = 0.0;  // rad/s, measured = true yaw rate + bias + white noise
};

struct TrajectorySample {
  double stamp = 0.0;
  Pose2 pose;
};

using Trajectory = std::vector<TrajectorySample>;

// Bilinear polar -> Cartesian resampling centered on the sensor. size_px must
// be odd and positive; pixels beyond the scan's max range read zero. Pixel
// (col, row) covers the sensor-frame point ((col - c) * res, (row - c) * res),
// c = size_px / 2.
Grid polar_to_cartesian(const PolarScan& scan, int size_px, double resolution);

// Same resampling, but each target pixel is looked up through the sensor pose
// at the azimuth that observed it, assuming the platform moves with a constant
// body twist (m/s, m/s, rad/s) over the sweep. With a zero twist this equals
// polar_to_cartesian.
Grid polar_to_cartesian_deskewed(const PolarScan& scan, int size_px, double resolution,
                                 const Twist2& body_velocity);

}  // namespace rslam
