#pragma once

#include "rslam/scan.hpp"
#include "rslam/simulator.hpp"

#include <string>
#include <vector>

namespace rslam {

// Scan file: two text header lines ("RSLAM_SCAN 1", then geometry + stamp),
// one line of per-azimuth timestamps, then row-major float32 intensities in
// little-endian byte order.
void save_scan(const std::string& path, const PolarScan& scan);
PolarScan load_scan(const std::string& path);  // throws std::runtime_error on malformed input

// CSV with header "stamp,x,y,theta".
void save_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory load_trajectory_csv(const std::string& path);

// CSV with header "stamp,omega".
void save_gyro_csv(const std::string& path, const std::vector<GyroSample>& gyro);
std::vector<GyroSample> load_gyro_csv(const std::string& path);

// On-disk sequence layout under dir/: scan_%06d.bin, ground_truth.csv,
// gyro.csv, seed_odometry.csv, meta.json.
void save_sequence(const std::string& dir, const SimulatedSequence& seq);
SimulatedSequence load_sequence(const std::string& dir);

}  // namespace rslam
