#include "rslam/simulator.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

using namespace rslam;

namespace {

RenderParams clean_params() {
  // Small noise-free geometry: 100 azimuths, 64 m of range at 0.5 m/bin.
  RenderParams p;
  p.azimuths = 100;
  p.range_bins = 128;
  p.range_resolution = 0.5;
  p.scan_duration = 0.0;
  p.noise_floor_mean = 0.0;
  p.noise_floor_sigma = 0.0;
  return p;
}

PoseAtTime static_pose(const Pose2& pose) {
  return [pose](double) { return pose; };
}

int argmax_bin(const PolarScan& scan, int row) {
  int best = 0;
  for (int b = 1; b < scan.range_bins; ++b)
    if (scan.intensities.at(b, row) > scan.intensities.at(best, row)) best = b;
  return best;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("world generation is deterministic and in bounds") {
  WorldGenOptions opts;
  const World a = generate_world(99, opts);
  const World b = generate_world(99, opts);
  const World c = generate_world(100, opts);
  REQUIRE(static_cast<int>(a.reflectors.size()) == opts.clusters * opts.per_cluster + opts.scattered);
  REQUIRE(a.reflectors.size() == b.reflectors.size());
  bool all_equal = true;
  for (size_t i = 0; i < a.reflectors.size(); ++i) {
    all_equal = all_equal && a.reflectors[i].position == b.reflectors[i].position &&
                a.reflectors[i].reflectivity == b.reflectors[i].reflectivity;
    CHECK(std::abs(a.reflectors[i].position.x()) <= 0.99 * opts.extent);
    CHECK(std::abs(a.reflectors[i].position.y()) <= 0.99 * opts.extent);
    CHECK(a.reflectors[i].reflectivity >= opts.min_reflectivity);
    CHECK(a.reflectors[i].reflectivity <= 1.0);
  }
  CHECK(all_equal);
  CHECK_NOTHROW(a.validate());
  bool differs = false;
  for (size_t i = 0; i < a.reflectors.size(); ++i)
    differs = differs || a.reflectors[i].position != c.reflectors[i].position;
  CHECK(differs);
}

TEST_CASE("world validation rejects bad reflectors") {
  World w;
  w.extent = 50.0;
  w.reflectors.push_back({{10.0, 0.0}, 1.5});
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w.reflectors[0].reflectivity = 0.5;
  CHECK_NOTHROW(w.validate());
  w.reflectors[0].position = {60.0, 0.0};
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  World dyn;
  dyn.dynamic_reflectors.push_back({{0.0, 0.0}, {1.0, 0.0}, -0.1});
  CHECK_THROWS_AS(dyn.validate(), std::invalid_argument);
}

TEST_CASE("render rejects bad parameters") {
  World w;
  const PoseAtTime pose = static_pose(Pose2::identity());
  RenderParams p = clean_params();
  p.azimuths = 0;
  CHECK_THROWS_AS(render_scan(w, pose, 0.0, p), std::invalid_argument);
  p = clean_params();
  p.range_bins = -1;
  CHECK_THROWS_AS(render_scan(w, pose, 0.0, p), std::invalid_argument);
  p = clean_params();
  p.range_resolution = 0.0;
  CHECK_THROWS_AS(render_scan(w, pose, 0.0, p), std::invalid_argument);
  p = clean_params();
  p.scan_duration = -0.1;
  CHECK_THROWS_AS(render_scan(w, pose, 0.0, p), std::invalid_argument);
  p = clean_params();
  p.beam_sigma = 0.0;
  CHECK_THROWS_AS(render_scan(w, pose, 0.0, p), std::invalid_argument);
  p = clean_params();
  p.noise_floor_sigma = -0.01;
  CHECK_THROWS_AS(render_scan(w, pose, 0.0, p), std::invalid_argument);
}

TEST_CASE("a reflector on a beam axis lands on its range bin at full amplitude") {
  // Bin b spans a center range of (b + 0.5) * 0.5 m; 30.25 m is exactly bin 60.
  World w;
  w.extent = 150.0;
  w.reflectors.push_back({{30.25, 0.0}, 0.8});
  const RenderParams p = clean_params();
  const PolarScan scan = render_scan(w, static_pose(Pose2::identity()), 0.0, p);

  REQUIRE(scan.azimuths == 100);
  REQUIRE(scan.range_bins == 128);
  CHECK(scan.max_range() == doctest::Approx(64.0));
  CHECK(scan.intensities.at(60, 0) == doctest::Approx(0.8).epsilon(1e-7));
  CHECK(argmax_bin(scan, 0) == 60);
  // Gaussian range spread is symmetric about the true range.
  CHECK(scan.intensities.at(59, 0) == doctest::Approx(scan.intensities.at(61, 0)));
  CHECK(scan.intensities.at(59, 0) ==
        doctest::Approx(0.8 * std::exp(-0.5 * 0.25 / (p.range_sigma * p.range_sigma))));
  // Neighboring azimuth rows are outside the 4-sigma beam gate.
  for (int b = 0; b < scan.range_bins; ++b) {
    CHECK(scan.intensities.at(b, 1) == 0.0f);
    CHECK(scan.intensities.at(b, 99) == 0.0f);
    CHECK(scan.intensities.at(b, 50) == 0.0f);
  }
}

TEST_CASE("a reflector at bearing pi/2 lands on row azimuths/4") {
  World w;
  w.reflectors.push_back({{0.0, 60.25}, 1.0});
  const PolarScan scan = render_scan(w, static_pose(Pose2::identity()), 0.0, clean_params());
  CHECK(scan.intensities.at(120, 25) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(argmax_bin(scan, 25) == 120);
}

TEST_CASE("sensor rotation shifts the observed bearing") {
  World w;
  w.reflectors.push_back({{30.25, 0.0}, 1.0});
  // Sensor yawed by -pi/2: the reflector appears at sensor bearing +pi/2.
  const PolarScan scan =
      render_scan(w, static_pose(Pose2(0.0, 0.0, -kPi / 2.0)), 0.0, clean_params());
  CHECK(scan.intensities.at(60, 25) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("returns attenuate beyond the knee") {
  World w;
  w.reflectors.push_back({{40.25, 0.0}, 1.0});
  RenderParams p = clean_params();
  p.attenuation_knee = 20.0;
  p.attenuation_exponent = 2.0;
  const PolarScan scan = render_scan(w, static_pose(Pose2::identity()), 0.0, p);
  const double expected = std::pow(20.0 / 40.25, 2.0);
  CHECK(scan.intensities.at(80, 0) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("zero scan duration renders a snapshot") {
  World w;
  w.reflectors.push_back({{20.25, 5.0}, 0.9});
  RenderParams p = clean_params();
  const PoseAtTime moving = [](double t) { return Pose2(3.0 * t, 0.0, 0.1 * t); };
  const PolarScan snap = render_scan(w, moving, 2.0, p);
  const PolarScan fixed = render_scan(w, static_pose(moving(2.0)), 2.0, p);
  CHECK(snap.intensities.data == fixed.intensities.data);
  for (double t : snap.azimuth_timestamps) CHECK(t == 2.0);
  CHECK(snap.stamp == 2.0);
}

TEST_CASE("azimuth timestamps sweep linearly over the scan duration") {
  World w;
  RenderParams p = clean_params();
  p.scan_duration = 0.25;
  const PolarScan scan = render_scan(w, static_pose(Pose2::identity()), 1.0, p);
  REQUIRE(scan.azimuth_timestamps.size() == 100);
  for (int k = 0; k < 100; ++k)
    CHECK(scan.azimuth_timestamps[k] == doctest::Approx(1.0 + 0.25 * k / 100.0));
}

TEST_CASE("platform motion during the sweep distorts the scan") {
  // Moving +x at 10 m/s; the reflector behind the sensor is scanned half a
  // revolution in, when the platform has advanced 1.25 m, so its return sits
  // at 31.25 m instead of 30 m.
  World w;
  w.reflectors.push_back({{-30.0, 0.0}, 1.0});
  RenderParams p = clean_params();
  p.scan_duration = 0.25;
  const PoseAtTime moving = [](double t) { return Pose2(10.0 * t, 0.0, 0.0); };
  const PolarScan scan = render_scan(w, moving, 0.0, p);
  CHECK(argmax_bin(scan, 50) == 62);  // (62 + 0.5) * 0.5 = 31.25 m
  p.scan_duration = 0.0;
  const PolarScan snap = render_scan(w, moving, 0.0, p);
  const int b = argmax_bin(snap, 50);
  CHECK((b == 59 || b == 60));  // 30 m sits on the bin 59/60 boundary
}

TEST_CASE("dynamic reflectors are sampled at each row's timestamp") {
  // Radially receding target at bearing pi/2: by the time row 25 sweeps past
  // (t = 0.0625 s) it has moved from 28.25 m out to 30.75 m.
  World w;
  w.dynamic_reflectors.push_back({{0.0, 28.25}, {0.0, 40.0}, 1.0});
  RenderParams p = clean_params();
  p.scan_duration = 0.25;
  const PolarScan scan = render_scan(w, static_pose(Pose2::identity()), 0.0, p);
  CHECK(argmax_bin(scan, 25) == 61);  // (61 + 0.5) * 0.5 = 30.75 m
  CHECK(scan.intensities.at(61, 25) == doctest::Approx(1.0).epsilon(1e-7));
  // A snapshot freezes it at the start range instead.
  p.scan_duration = 0.0;
  const PolarScan snap = render_scan(w, static_pose(Pose2::identity()), 0.0, p);
  CHECK(argmax_bin(snap, 25) == 56);  // (56 + 0.5) * 0.5 = 28.25 m
  CHECK(snap.intensities.at(56, 25) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("noise floor matches the clipped-normal mean and is seed-stable") {
  World w;
  RenderParams p = clean_params();
  p.azimuths = 200;
  p.range_bins = 256;
  p.noise_floor_mean = 0.02;
  p.noise_floor_sigma = 0.01;
  p.noise_seed = 123;
  const PolarScan a = render_scan(w, static_pose(Pose2::identity()), 0.0, p);
  const PolarScan b = render_scan(w, static_pose(Pose2::identity()), 0.0, p);
  CHECK(a.intensities.data == b.intensities.data);

  // E[max(0, N(0.02, 0.01))] = mu * Phi(2) + sigma * phi(2).
  const double expected = 0.0200849;
  CHECK(a.intensities.sum() / static_cast<double>(a.intensities.size()) ==
        doctest::Approx(expected).epsilon(0.02));
  for (float v : a.intensities.data) CHECK(v >= 0.0f);

  p.noise_seed = 124;
  const PolarScan c = render_scan(w, static_pose(Pose2::identity()), 0.0, p);
  CHECK(a.intensities.data != c.intensities.data);
}

TEST_CASE("zero-sigma noise floor adds the constant mean") {
  World w;
  RenderParams p = clean_params();
  p.noise_floor_mean = 0.05;
  p.noise_floor_sigma = 0.0;
  const PolarScan scan = render_scan(w, static_pose(Pose2::identity()), 0.0, p);
  for (float v : scan.intensities.data) CHECK(v == 0.05f);
}

TEST_CASE("straight-line trajectory is linear in time") {
  SmoothTrajectory traj({Pose2(0, 0, 0), Pose2(100, 0, 0)}, 10.0);
  CHECK(traj.path_length() == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(traj.duration() == doctest::Approx(10.0).epsilon(1e-9));
  for (double t = 0.0; t <= 10.0; t += 0.5) {
    const Pose2 p = traj.pose(t);
    CHECK(p.x == doctest::Approx(10.0 * t).epsilon(1e-6));
    CHECK(std::abs(p.y) < 1e-9);
    CHECK(std::abs(p.theta) < 1e-9);
    CHECK(traj.arc_position(t) == doctest::Approx(10.0 * t).epsilon(1e-6));
    CHECK(std::abs(traj.yaw_rate(t)) < 1e-9);
  }
  // Clamped outside [0, duration].
  CHECK(traj.pose(-1.0).x == doctest::Approx(0.0));
  CHECK(traj.pose(25.0).x == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("stop profile follows cruise / cosine ramp / dwell pieces") {
  // 200 m line at 10 m/s, 3 s stop at the middle waypoint, 2 s ramps.
  // Ramps each cover 10 m, so: cruise to s=90 by t=9, ramp down to s=100 by
  // t=11, dwell to t=14, ramp up to s=110 by t=16, cruise to s=200 by t=25.
  SmoothTrajectory traj({Pose2(0, 0, 0), Pose2(100, 0, 0), Pose2(200, 0, 0)}, 10.0,
                        {{1, 3.0}}, 2.0);
  CHECK(traj.duration() == doctest::Approx(25.0).epsilon(1e-6));
  CHECK(traj.arc_position(9.0) == doctest::Approx(90.0).epsilon(1e-6));
  CHECK(traj.arc_position(10.0) == doctest::Approx(95.0 + 10.0 / kPi).epsilon(1e-6));
  CHECK(traj.arc_position(11.0) == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(traj.arc_position(12.5) == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(traj.arc_position(14.0) == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(traj.arc_position(15.0) == doctest::Approx(105.0 - 10.0 / kPi).epsilon(1e-6));
  CHECK(traj.arc_position(16.0) == doctest::Approx(110.0).epsilon(1e-6));
  CHECK(traj.arc_position(18.0) == doctest::Approx(130.0).epsilon(1e-6));
  CHECK(traj.arc_position(25.0) == doctest::Approx(200.0).epsilon(1e-6));
  // The platform truly dwells: position frozen during the stop.
  CHECK(traj.pose(12.0).x == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(traj.pose(13.5).x == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("closed loops join smoothly") {
  const std::vector<Pose2> square = {Pose2(0, 0, 0), Pose2(100, 0, 0), Pose2(100, 100, 0),
                                     Pose2(0, 100, 0), Pose2(0, 0, 0)};
  SmoothTrajectory traj(square, 10.0);
  CHECK(traj.path_length() > 390.0);
  CHECK(traj.path_length() < 440.0);
  const Pose2 start = traj.pose(0.0);
  const Pose2 end = traj.pose(traj.duration());
  CHECK(start.theta == doctest::Approx(-kPi / 4.0).epsilon(1e-6));
  CHECK(end.x == doctest::Approx(start.x).epsilon(1e-6));
  CHECK(end.y == doctest::Approx(start.y).epsilon(1e-6));
  CHECK(std::abs(wrap_angle(end.theta - start.theta)) < 1e-6);
  // Heading is continuous: no jumps larger than the sampling allows.
  double prev = start.theta;
  for (double t = 0.05; t <= traj.duration(); t += 0.05) {
    const double th = traj.pose(t).theta;
    CHECK(std::abs(wrap_angle(th - prev)) < 0.1);
    prev = th;
  }
}

TEST_CASE("trajectory construction rejects bad input") {
  CHECK_THROWS_AS(SmoothTrajectory({Pose2(0, 0, 0)}, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(SmoothTrajectory({Pose2(0, 0, 0), Pose2(0, 0, 0), Pose2(10, 0, 0)}, 10.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(SmoothTrajectory({Pose2(0, 0, 0), Pose2(10, 0, 0)}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(SmoothTrajectory({Pose2(0, 0, 0), Pose2(10, 0, 0)}, 10.0, {}, -1.0),
                  std::invalid_argument);
  // Stop at the far end: the ramp would overrun the path.
  CHECK_THROWS_WITH_AS(SmoothTrajectory({Pose2(0, 0, 0), Pose2(100, 0, 0)}, 10.0, {{1, 2.0}}, 2.0),
                       "stop too close to the path end for the ramp time", std::invalid_argument);
  // Stop too near the start for the ramp-down: waypoint 1 sits 5 m in but a
  // 2 s ramp at 10 m/s needs 10 m of run-up.
  CHECK_THROWS_WITH_AS(
      SmoothTrajectory({Pose2(0, 0, 0), Pose2(5, 0, 0), Pose2(10, 0, 0)}, 10.0, {{1, 2.0}}, 2.0),
      "stops too close together for the ramp time", std::invalid_argument);
  CHECK_THROWS_AS(
      SmoothTrajectory({Pose2(0, 0, 0), Pose2(100, 0, 0)}, 10.0, {{5, 2.0}}, 2.0),
      std::invalid_argument);
  CHECK_THROWS_AS(
      SmoothTrajectory({Pose2(0, 0, 0), Pose2(100, 0, 0), Pose2(200, 0, 0)}, 10.0, {{1, -2.0}}, 2.0),
      std::invalid_argument);
}

TEST_CASE("sequence simulation: counts, stamps, and seed odometry") {
  World w;  // empty world keeps rendering cheap
  SequenceOptions opts;
  opts.render = clean_params();
  opts.render.scan_duration = 0.1;
  opts.speed = 10.0;
  opts.scan_period = 0.25;
  opts.gyro_rate = 100.0;
  opts.gyro_bias = 0.01;
  opts.gyro_noise_sigma = 0.001;
  opts.seed = 5;
  const std::vector<Pose2> line = {Pose2(0, 0, 0), Pose2(200, 0, 0)};
  const SimulatedSequence seq = simulate_sequence(w, line, opts);

  REQUIRE(static_cast<int>(seq.scans.size()) == 80);  // floor((20 - 0.1) / 0.25) + 1
  REQUIRE(seq.ground_truth.size() == seq.scans.size());
  REQUIRE(seq.seed_odometry.size() == seq.scans.size() - 1);
  REQUIRE(static_cast<int>(seq.gyro.size()) == 2001);
  CHECK(seq.true_gyro_bias == 0.01);
  CHECK(seq.path_length == doctest::Approx(200.0).epsilon(1e-9));
  for (size_t m = 0; m < seq.scans.size(); ++m) {
    CHECK(seq.scans[m].stamp == doctest::Approx(0.25 * static_cast<double>(m)));
    CHECK(seq.ground_truth[m].stamp == seq.scans[m].stamp);
  }
  for (size_t g = 0; g < seq.gyro.size(); ++g)
    CHECK(seq.gyro[g].stamp == doctest::Approx(static_cast<double>(g) / 100.0));

  // Noise-free seed odometry equals the ground-truth relative motion exactly.
  for (size_t m = 0; m + 1 < seq.ground_truth.size(); ++m) {
    const Pose2 rel = between(seq.ground_truth[m].pose, seq.ground_truth[m + 1].pose);
    CHECK(seq.seed_odometry[m].x == rel.x);
    CHECK(seq.seed_odometry[m].y == rel.y);
    CHECK(seq.seed_odometry[m].theta == rel.theta);
  }

  // On a straight line the gyro mean estimates the bias.
  double mean = 0.0;
  for (const GyroSample& s : seq.gyro) mean += s.omega;
  mean /= static_cast<double>(seq.gyro.size());
  CHECK(mean == doctest::Approx(0.01).epsilon(0.02));

  const SimulatedSequence again = simulate_sequence(w, line, opts);
  CHECK(again.gyro.size() == seq.gyro.size());
  bool same = true;
  for (size_t g = 0; g < seq.gyro.size(); ++g) same = same && again.gyro[g].omega == seq.gyro[g].omega;
  CHECK(same);
  opts.seed = 6;
  const SimulatedSequence other = simulate_sequence(w, line, opts);
  bool differs = false;
  for (size_t g = 0; g < seq.gyro.size(); ++g)
    differs = differs || other.gyro[g].omega != seq.gyro[g].omega;
  CHECK(differs);

  // Nonzero odometry noise perturbs the seed odometry deterministically.
  opts.seed = 5;
  opts.odom_noise_sigma = {0.05, 0.05, 0.005};
  const SimulatedSequence noisy = simulate_sequence(w, line, opts);
  bool moved = false;
  for (size_t m = 0; m + 1 < seq.ground_truth.size(); ++m)
    moved = moved || noisy.seed_odometry[m].x != seq.seed_odometry[m].x;
  CHECK(moved);
}

TEST_CASE("sequence simulation rejects bad options") {
  World w;
  SequenceOptions opts;
  opts.render = clean_params();
  const std::vector<Pose2> line = {Pose2(0, 0, 0), Pose2(100, 0, 0)};
  opts.scan_period = 0.0;
  CHECK_THROWS_AS(simulate_sequence(w, line, opts), std::invalid_argument);
  opts.scan_period = 0.25;
  opts.gyro_rate = 0.0;
  CHECK_THROWS_AS(simulate_sequence(w, line, opts), std::invalid_argument);
  opts.gyro_rate = 100.0;
  opts.render.scan_duration = 0.25;
  CHECK_THROWS_AS(simulate_sequence(w, {Pose2(0, 0, 0), Pose2(1, 0, 0)}, opts),
                  std::invalid_argument);
}

}  // TEST_SUITE
