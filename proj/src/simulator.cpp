#include "rslam/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rslam {

void World::validate() const {
  for (const Reflector& r : reflectors) {
    if (r.reflectivity < 0.0 || r.reflectivity > 1.0)
      throw std::invalid_argument("reflectivity outside [0, 1]");
    if (std::abs(r.position.x()) > extent || std::abs(r.position.y()) > extent)
      throw std::invalid_argument("reflector outside world extent");
  }
  for (const DynamicReflector& r : dynamic_reflectors) {
    if (r.reflectivity < 0.0 || r.reflectivity > 1.0)
      throw std::invalid_argument("reflectivity outside [0, 1]");
  }
}

World generate_world(std::uint64_t seed, const WorldGenOptions& opts) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> center_dist(-0.8 * opts.extent, 0.8 * opts.extent);
  std::uniform_real_distribution<double> scatter_dist(-0.95 * opts.extent, 0.95 * opts.extent);
  std::uniform_real_distribution<double> refl_dist(opts.min_reflectivity, 1.0);
  std::normal_distribution<double> member_dist(0.0, opts.cluster_sigma);

  World world;
  world.extent = opts.extent;
  const double lim = 0.99 * opts.extent;
  for (int c = 0; c < opts.clusters; ++c) {
    const double cx = center_dist(rng);
    const double cy = center_dist(rng);
    for (int i = 0; i < opts.per_cluster; ++i) {
      Reflector r;
      r.position.x() = std::clamp(cx + member_dist(rng), -lim, lim);
      r.position.y() = std::clamp(cy + member_dist(rng), -lim, lim);
      r.reflectivity = refl_dist(rng);
      world.reflectors.push_back(r);
    }
  }
  for (int i = 0; i < opts.scattered; ++i) {
    Reflector r;
    r.position.x() = scatter_dist(rng);
    r.position.y() = scatter_dist(rng);
    r.reflectivity = refl_dist(rng);
    world.reflectors.push_back(r);
  }
  return world;
}

namespace {

double attenuation(double range, const RenderParams& p) {
  if (range <= p.attenuation_knee) return 1.0;
  return std::pow(p.attenuation_knee / range, p.attenuation_exponent);
}

// Deposits one reflector return into a single azimuth row.
void deposit(PolarScan& scan, int row, const Eigen::Vector2d& rel, double reflectivity,
             const RenderParams& p) {
  const double range = rel.norm();
  if (range < 1e-6) return;
  const double max_range = p.range_bins * p.range_resolution;
  if (range > max_range + 4.0 * p.range_sigma) return;

  const double row_angle = 2.0 * kPi * row / p.azimuths;
  const double bearing = std::atan2(rel.y(), rel.x());
  const double da = wrap_angle(bearing - row_angle);
  if (std::abs(da) > 4.0 * p.beam_sigma) return;

  const double amp = reflectivity * attenuation(range, p) *
                     std::exp(-0.5 * da * da / (p.beam_sigma * p.beam_sigma));
  const int b_lo = std::max(0, static_cast<int>(std::floor((range - 4.0 * p.range_sigma) / p.range_resolution)));
  const int b_hi = std::min(p.range_bins - 1,
                            static_cast<int>(std::ceil((range + 4.0 * p.range_sigma) / p.range_resolution)));
  for (int b = b_lo; b <= b_hi; ++b) {
    const double bin_center = (b + 0.5) * p.range_resolution;
    const double dr = bin_center - range;
    const double w = std::exp(-0.5 * dr * dr / (p.range_sigma * p.range_sigma));
    scan.intensities.at(b, row) += static_cast<float>(amp * w);
  }
}

}  // namespace

PolarScan render_scan(const World& world, const PoseAtTime& sensor_pose, double scan_start,
                      const RenderParams& params) {
  if (params.azimuths <= 0 || params.range_bins <= 0)
    throw std::invalid_argument("scan geometry must be positive");
  if (params.range_resolution <= 0.0) throw std::invalid_argument("range resolution must be positive");
  if (params.scan_duration < 0.0) throw std::invalid_argument("scan duration must be non-negative");
  if (params.beam_sigma <= 0.0 || params.range_sigma <= 0.0)
    throw std::invalid_argument("beam and range sigmas must be positive");
  if (params.noise_floor_sigma < 0.0)
    throw std::invalid_argument("noise floor sigma must be non-negative");
  world.validate();

  PolarScan scan;
  scan.azimuths = params.azimuths;
  scan.range_bins = params.range_bins;
  scan.range_resolution = params.range_resolution;
  scan.stamp = scan_start;
  scan.intensities = Grid(params.range_bins, params.azimuths);
  scan.azimuth_timestamps.resize(params.azimuths);

  for (int k = 0; k < params.azimuths; ++k) {
    const double t = scan_start + params.scan_duration * k / params.azimuths;
    scan.azimuth_timestamps[k] = t;
    const Pose2 pose = sensor_pose(t);
    const Eigen::Matrix2d r_inv = rotation2d(-pose.theta);
    const Eigen::Vector2d trans = pose.translation();
    for (const Reflector& refl : world.reflectors)
      deposit(scan, k, r_inv * (refl.position - trans), refl.reflectivity, params);
    for (const DynamicReflector& refl : world.dynamic_reflectors) {
      const Eigen::Vector2d p = refl.start + refl.velocity * t;
      deposit(scan, k, r_inv * (p - trans), refl.reflectivity, params);
    }
  }

  if (params.noise_floor_sigma > 0.0) {
    std::mt19937_64 rng(params.noise_seed);
    std::normal_distribution<double> floor_dist(params.noise_floor_mean, params.noise_floor_sigma);
    for (int k = 0; k < params.azimuths; ++k)
      for (int b = 0; b < params.range_bins; ++b)
        scan.intensities.at(b, k) += static_cast<float>(std::max(0.0, floor_dist(rng)));
  } else if (params.noise_floor_mean > 0.0) {
    for (float& v : scan.intensities.data) v += static_cast<float>(params.noise_floor_mean);
  }
  return scan;
}

SmoothTrajectory::SmoothTrajectory(const std::vector<Pose2>& waypoints, double speed,
                                   std::vector<StopEvent> stops, double ramp_time)
    : speed_(speed), ramp_time_(ramp_time) {
  if (waypoints.size() < 2) throw std::invalid_argument("need at least two waypoints");
  if (speed <= 0.0) throw std::invalid_argument("speed must be positive");
  if (ramp_time < 0.0) throw std::invalid_argument("ramp time must be non-negative");

  for (const Pose2& w : waypoints) points_.emplace_back(w.x, w.y);
  for (size_t i = 0; i + 1 < points_.size(); ++i)
    if ((points_[i + 1] - points_[i]).norm() < 1e-9)
      throw std::invalid_argument("consecutive waypoints coincide");

  closed_ = (points_.front() - points_.back()).norm() < 1e-9;
  if (closed_) points_.pop_back();
  if (points_.size() < 2) throw std::invalid_argument("need at least two distinct waypoints");

  const int segments = static_cast<int>(points_.size()) - (closed_ ? 0 : 1);
  constexpr int kSamplesPerSegment = 200;
  table_u_.reserve(segments * kSamplesPerSegment + 1);
  table_s_.reserve(segments * kSamplesPerSegment + 1);
  table_u_.push_back(0.0);
  table_s_.push_back(0.0);
  Eigen::Vector2d prev = position_at_u(0.0);
  for (int j = 1; j <= segments * kSamplesPerSegment; ++j) {
    const double u = static_cast<double>(j) / kSamplesPerSegment;
    const Eigen::Vector2d cur = position_at_u(u);
    table_u_.push_back(u);
    table_s_.push_back(table_s_.back() + (cur - prev).norm());
    prev = cur;
  }
  total_length_ = table_s_.back();

  // Speed profile: cruise pieces separated by ramp-down / dwell / ramp-up
  // around each stop. Cosine ramps cover speed * ramp_time / 2 of arc each.
  std::sort(stops.begin(), stops.end(),
            [](const StopEvent& a, const StopEvent& b) { return a.waypoint_index < b.waypoint_index; });
  const double d_ramp = speed_ * ramp_time_ / 2.0;
  double s_cursor = 0.0;
  double t_cursor = 0.0;
  auto push = [&](int kind, double dt, double ds) {
    if (dt <= 1e-12) return;
    profile_.push_back({t_cursor, t_cursor + dt, s_cursor, speed_, kind});
    t_cursor += dt;
    s_cursor += ds;
  };
  const int n_way = static_cast<int>(waypoints.size());
  for (const StopEvent& stop : stops) {
    if (stop.waypoint_index < 0 || stop.waypoint_index >= n_way)
      throw std::invalid_argument("stop waypoint index out of range");
    if (stop.duration < 0.0) throw std::invalid_argument("stop duration must be non-negative");
    const int idx = std::min(stop.waypoint_index, segments);
    const double s_stop = table_s_[static_cast<size_t>(idx) * kSamplesPerSegment];
    if (s_stop - d_ramp < s_cursor - 1e-9)
      throw std::invalid_argument("stops too close together for the ramp time");
    if (s_stop + d_ramp > total_length_ + 1e-9)
      throw std::invalid_argument("stop too close to the path end for the ramp time");
    push(0, (s_stop - d_ramp - s_cursor) / speed_, s_stop - d_ramp - s_cursor);
    push(1, ramp_time_, d_ramp);
    push(2, stop.duration, 0.0);
    push(3, ramp_time_, d_ramp);
  }
  push(0, (total_length_ - s_cursor) / speed_, total_length_ - s_cursor);
  duration_ = t_cursor;
}

Eigen::Vector2d SmoothTrajectory::position_at_u(double u) const {
  const int n = static_cast<int>(points_.size());
  const int segments = closed_ ? n : n - 1;
  int i = std::clamp(static_cast<int>(std::floor(u)), 0, segments - 1);
  const double s = u - i;
  auto point = [&](int k) -> const Eigen::Vector2d& {
    return points_[static_cast<size_t>(closed_ ? (k % n + n) % n : std::clamp(k, 0, n - 1))];
  };
  const Eigen::Vector2d p0 = point(i);
  const Eigen::Vector2d p1 = point(i + 1);
  const Eigen::Vector2d m0 = closed_ || (i > 0) ? ((p1 - point(i - 1)) * 0.5).eval() : (p1 - p0).eval();
  const Eigen::Vector2d m1 =
      closed_ || (i + 2 <= n - 1) ? ((point(i + 2) - p0) * 0.5).eval() : (p1 - p0).eval();
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 +
         (s3 - s2) * m1;
}

Eigen::Vector2d SmoothTrajectory::tangent_at_u(double u) const {
  const int n = static_cast<int>(points_.size());
  const int segments = closed_ ? n : n - 1;
  int i = std::clamp(static_cast<int>(std::floor(u)), 0, segments - 1);
  const double s = u - i;
  auto point = [&](int k) -> const Eigen::Vector2d& {
    return points_[static_cast<size_t>(closed_ ? (k % n + n) % n : std::clamp(k, 0, n - 1))];
  };
  const Eigen::Vector2d p0 = point(i);
  const Eigen::Vector2d p1 = point(i + 1);
  const Eigen::Vector2d m0 = closed_ || (i > 0) ? ((p1 - point(i - 1)) * 0.5).eval() : (p1 - p0).eval();
  const Eigen::Vector2d m1 =
      closed_ || (i + 2 <= n - 1) ? ((point(i + 2) - p0) * 0.5).eval() : (p1 - p0).eval();
  const double s2 = s * s;
  return (6 * s2 - 6 * s) * p0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * p1 +
         (3 * s2 - 2 * s) * m1;
}

double SmoothTrajectory::u_of_arc(double s) const {
  s = std::clamp(s, 0.0, total_length_);
  const auto it = std::lower_bound(table_s_.begin(), table_s_.end(), s);
  if (it == table_s_.begin()) return table_u_.front();
  const size_t hi = static_cast<size_t>(it - table_s_.begin());
  const size_t lo = hi - 1;
  const double span = table_s_[hi] - table_s_[lo];
  const double w = span > 1e-12 ? (s - table_s_[lo]) / span : 0.0;
  return table_u_[lo] + w * (table_u_[hi] - table_u_[lo]);
}

double SmoothTrajectory::arc_position(double t) const {
  t = std::clamp(t, 0.0, duration_);
  size_t i = 0;
  while (i + 1 < profile_.size() && t >= profile_[i].t1) ++i;
  const ProfilePiece& p = profile_[i];
  const double tau = t - p.t0;
  const double tt = p.t1 - p.t0;
  switch (p.kind) {
    case 0:
      return p.s0 + p.speed0 * tau;
    case 1:
      return p.s0 + 0.5 * p.speed0 * (tau + tt / kPi * std::sin(kPi * tau / tt));
    case 2:
      return p.s0;
    default:
      return p.s0 + 0.5 * p.speed0 * (tau - tt / kPi * std::sin(kPi * tau / tt));
  }
}

Pose2 SmoothTrajectory::pose(double t) const {
  const double u = u_of_arc(arc_position(t));
  const Eigen::Vector2d pos = position_at_u(u);
  const Eigen::Vector2d tan = tangent_at_u(u);
  return Pose2(pos.x(), pos.y(), std::atan2(tan.y(), tan.x()));
}

double SmoothTrajectory::yaw_rate(double t) const {
  const double h = 1e-3;
  const double t1 = std::max(0.0, t - h);
  const double t2 = std::min(duration_, t + h);
  if (t2 - t1 < 1e-9) return 0.0;
  return wrap_angle(pose(t2).theta - pose(t1).theta) / (t2 - t1);
}

SimulatedSequence simulate_sequence(const World& world, const std::vector<Pose2>& waypoints,
                                    const SequenceOptions& opts) {
  if (opts.scan_period <= 0.0) throw std::invalid_argument("scan period must be positive");
  if (opts.gyro_rate <= 0.0) throw std::invalid_argument("gyro rate must be positive");
  SmoothTrajectory traj(waypoints, opts.speed, opts.stops, opts.ramp_time);
  const double total = traj.duration();
  if (total < opts.render.scan_duration)
    throw std::invalid_argument("trajectory shorter than one scan");

  SimulatedSequence seq;
  seq.true_gyro_bias = opts.gyro_bias;
  seq.path_length = traj.path_length();

  const PoseAtTime pose_fn = [&traj](double t) { return traj.pose(t); };
  const int n_scans =
      static_cast<int>(std::floor((total - opts.render.scan_duration) / opts.scan_period + 1e-9)) + 1;
  for (int m = 0; m < n_scans; ++m) {
    const double t0 = m * opts.scan_period;
    RenderParams params = opts.render;
    params.noise_seed = opts.seed ^ (0x9E3779B97F4A7C15ull * (m + 1));
    seq.scans.push_back(render_scan(world, pose_fn, t0, params));
    seq.ground_truth.push_back({t0, traj.pose(t0)});
  }

  std::mt19937_64 gyro_rng(opts.seed ^ 0x5DEECE66Dull);
  std::normal_distribution<double> unit(0.0, 1.0);
  const int n_gyro = static_cast<int>(std::floor(total * opts.gyro_rate)) + 1;
  for (int g = 0; g < n_gyro; ++g) {
    const double t = g / opts.gyro_rate;
    seq.gyro.push_back({t, traj.yaw_rate(t) + opts.gyro_bias + opts.gyro_noise_sigma * unit(gyro_rng)});
  }

  std::mt19937_64 odom_rng(opts.seed ^ 0xC0FFEEull);
  for (int m = 0; m + 1 < n_scans; ++m) {
    const Pose2 rel = between(seq.ground_truth[m].pose, seq.ground_truth[m + 1].pose);
    const Pose2 noise(opts.odom_noise_sigma.x() * unit(odom_rng),
                      opts.odom_noise_sigma.y() * unit(odom_rng),
                      opts.odom_noise_sigma.z() * unit(odom_rng));
    seq.seed_odometry.push_back(compose(rel, noise));
  }
  return seq;
}

}  // namespace rslam
