#include "rslam/scan_io.hpp"
#include "rslam/simulator.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

using namespace rslam;
namespace fs = std::filesystem;

namespace {

PolarScan make_scan(std::uint64_t seed) {
  PolarScan scan;
  scan.azimuths = 16;
  scan.range_bins = 24;
  scan.range_resolution = 0.375;
  scan.stamp = 12.0625;
  scan.intensities = Grid(scan.range_bins, scan.azimuths);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& v : scan.intensities.data) v = u(rng);
  scan.azimuth_timestamps.resize(scan.azimuths);
  for (int k = 0; k < scan.azimuths; ++k)
    scan.azimuth_timestamps[k] = scan.stamp + 0.013 * k + 1e-7;
  return scan;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_SUITE("io") {

TEST_CASE("scan files round-trip bit for bit") {
  TempDir dir("rslam_io_scan");
  const PolarScan scan = make_scan(7);
  save_scan(dir.file("a.bin"), scan);
  const PolarScan back = load_scan(dir.file("a.bin"));
  CHECK(back.azimuths == scan.azimuths);
  CHECK(back.range_bins == scan.range_bins);
  CHECK(back.range_resolution == scan.range_resolution);
  CHECK(back.stamp == scan.stamp);
  CHECK(back.azimuth_timestamps == scan.azimuth_timestamps);
  CHECK(back.intensities.data == scan.intensities.data);
  CHECK(back.intensities.width == scan.range_bins);
  CHECK(back.intensities.height == scan.azimuths);
}

TEST_CASE("scan loading rejects malformed files") {
  TempDir dir("rslam_io_badscan");
  CHECK_THROWS_AS(load_scan(dir.file("missing.bin")), std::runtime_error);

  {
    std::ofstream out(dir.file("magic.bin"), std::ios::binary);
    out << "NOT_A_SCAN 1\n4 4 0.5 0\n0 0 0 0\n";
  }
  CHECK_THROWS_AS(load_scan(dir.file("magic.bin")), std::runtime_error);

  {
    std::ofstream out(dir.file("header.bin"), std::ios::binary);
    out << "RSLAM_SCAN 1\n-4 4 0.5 0\n";
  }
  CHECK_THROWS_AS(load_scan(dir.file("header.bin")), std::runtime_error);

  {
    const PolarScan scan = make_scan(8);
    save_scan(dir.file("full.bin"), scan);
    std::ifstream in(dir.file("full.bin"), std::ios::binary);
    std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    bytes.resize(bytes.size() - 10);
    std::ofstream(dir.file("cut.bin"), std::ios::binary) << bytes;
  }
  CHECK_THROWS_AS(load_scan(dir.file("cut.bin")), std::runtime_error);
}

TEST_CASE("trajectory csv keeps doubles exactly") {
  TempDir dir("rslam_io_traj");
  Trajectory traj;
  traj.push_back({0.1, Pose2(1.0 / 3.0, -2.0 / 7.0, 0.123456789012345)});
  traj.push_back({0.35, Pose2(-100.25, 3e-13, -3.1)});
  traj.push_back({1e6 + 0.5, Pose2(0.0, 0.0, kPi)});
  save_trajectory_csv(dir.file("t.csv"), traj);
  const Trajectory back = load_trajectory_csv(dir.file("t.csv"));
  REQUIRE(back.size() == traj.size());
  for (size_t i = 0; i < traj.size(); ++i) {
    CHECK(back[i].stamp == traj[i].stamp);
    CHECK(back[i].pose.x == traj[i].pose.x);
    CHECK(back[i].pose.y == traj[i].pose.y);
    CHECK(back[i].pose.theta == traj[i].pose.theta);
  }

  std::ofstream(dir.file("bad.csv")) << "stamp,x,y,theta\n1.0,2.0\n";
  CHECK_THROWS_AS(load_trajectory_csv(dir.file("bad.csv")), std::runtime_error);
  CHECK_THROWS_AS(load_trajectory_csv(dir.file("missing.csv")), std::runtime_error);
}

TEST_CASE("gyro csv keeps doubles exactly") {
  TempDir dir("rslam_io_gyro");
  std::vector<GyroSample> gyro = {{0.0, 0.001234567890123}, {0.01, -1.0 / 3.0}, {0.02, 0.0}};
  save_gyro_csv(dir.file("g.csv"), gyro);
  const auto back = load_gyro_csv(dir.file("g.csv"));
  REQUIRE(back.size() == gyro.size());
  for (size_t i = 0; i < gyro.size(); ++i) {
    CHECK(back[i].stamp == gyro[i].stamp);
    CHECK(back[i].omega == gyro[i].omega);
  }
  std::ofstream(dir.file("bad.csv")) << "stamp,omega\nnope\n";
  CHECK_THROWS_AS(load_gyro_csv(dir.file("bad.csv")), std::runtime_error);
}

TEST_CASE("sequence directories round-trip") {
  TempDir dir("rslam_io_seq");
  SimulatedSequence seq;
  seq.scans.push_back(make_scan(1));
  seq.scans.push_back(make_scan(2));
  seq.scans.push_back(make_scan(3));
  seq.ground_truth = {{0.0, Pose2(0, 0, 0)}, {0.25, Pose2(2.5, 0.01, 0.02)},
                      {0.5, Pose2(5.0, 0.04, 0.04)}};
  seq.gyro = {{0.0, 0.01}, {0.01, 0.011}, {0.02, 0.009}};
  seq.seed_odometry = {Pose2(2.5, 0.01, 0.02), Pose2(2.49, 0.005, 0.021)};
  seq.true_gyro_bias = 0.0123;
  seq.path_length = 5.001;

  save_sequence(dir.file("seq"), seq);
  CHECK(fs::exists(dir.path / "seq" / "scan_000000.bin"));
  CHECK(fs::exists(dir.path / "seq" / "scan_000002.bin"));
  CHECK(fs::exists(dir.path / "seq" / "ground_truth.csv"));
  CHECK(fs::exists(dir.path / "seq" / "gyro.csv"));
  CHECK(fs::exists(dir.path / "seq" / "meta.json"));

  const SimulatedSequence back = load_sequence(dir.file("seq"));
  REQUIRE(back.scans.size() == 3);
  CHECK(back.true_gyro_bias == seq.true_gyro_bias);
  CHECK(back.path_length == seq.path_length);
  for (size_t m = 0; m < 3; ++m) {
    CHECK(back.scans[m].intensities.data == seq.scans[m].intensities.data);
    CHECK(back.scans[m].stamp == seq.scans[m].stamp);
  }
  REQUIRE(back.ground_truth.size() == 3);
  CHECK(back.ground_truth[1].pose.x == seq.ground_truth[1].pose.x);
  REQUIRE(back.gyro.size() == 3);
  CHECK(back.gyro[2].omega == seq.gyro[2].omega);
  REQUIRE(back.seed_odometry.size() == 2);
  CHECK(back.seed_odometry[1].theta == seq.seed_odometry[1].theta);

  CHECK_THROWS_AS(load_sequence(dir.file("nowhere")), std::runtime_error);
}

}  // TEST_SUITE
