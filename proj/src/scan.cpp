#include "rslam/scan.hpp"

#include <cmath>
#include <stdexcept>

namespace rslam {

namespace {

// Bilinear lookup in polar coordinates with azimuth wrap and zero outside the
// sampled range span.
double sample_polar(const PolarScan& scan, double bearing, double range) {
  if (range < 0.0 || range >= scan.max_range()) return 0.0;
  const int a = scan.azimuths;
  double az_px = wrap_angle(bearing);
  if (az_px < 0.0) az_px += 2.0 * kPi;
  az_px = az_px / (2.0 * kPi) * a;
  int k0 = static_cast<int>(std::floor(az_px));
  const double wa = az_px - k0;
  k0 %= a;
  const int k1 = (k0 + 1) % a;

  const double r_px = range / scan.range_resolution - 0.5;
  const int b0 = static_cast<int>(std::floor(r_px));
  const double wr = r_px - b0;
  const int b1 = b0 + 1;
  auto v = [&](int b, int k) -> double {
    if (b < 0 || b >= scan.range_bins) return 0.0;
    return scan.intensities.at(b, k);
  };
  return (1.0 - wa) * ((1.0 - wr) * v(b0, k0) + wr * v(b1, k0)) +
         wa * ((1.0 - wr) * v(b0, k1) + wr * v(b1, k1));
}

void check_cart_args(int size_px, double resolution) {
  if (size_px <= 0 || size_px % 2 == 0)
    throw std::invalid_argument("cartesian size must be positive and odd");
  if (resolution <= 0.0) throw std::invalid_argument("cartesian resolution must be positive");
}

}  // namespace

Grid polar_to_cartesian(const PolarScan& scan, int size_px, double resolution) {
  check_cart_args(size_px, resolution);
  Grid out(size_px, size_px);
  const int c = size_px / 2;
  for (int row = 0; row < size_px; ++row) {
    const double y = (row - c) * resolution;
    for (int col = 0; col < size_px; ++col) {
      const double x = (col - c) * resolution;
      const double range = std::hypot(x, y);
      if (range >= scan.max_range()) continue;
      out.at(col, row) = static_cast<float>(sample_polar(scan, std::atan2(y, x), range));
    }
  }
  return out;
}

Grid polar_to_cartesian_deskewed(const PolarScan& scan, int size_px, double resolution,
                                 const Twist2& body_velocity) {
  check_cart_args(size_px, resolution);
  const int a = scan.azimuths;
  // Full-revolution sweep time extrapolated from the recorded row stamps.
  const double sweep = (a > 1)
      ? (scan.azimuth_timestamps.back() - scan.azimuth_timestamps.front()) * a / (a - 1)
      : 0.0;

  Grid out(size_px, size_px);
  const int c = size_px / 2;
  for (int row = 0; row < size_px; ++row) {
    const double y = (row - c) * resolution;
    for (int col = 0; col < size_px; ++col) {
      const double x = (col - c) * resolution;
      if (std::hypot(x, y) >= scan.max_range()) continue;
      const Eigen::Vector2d p(x, y);

      // The azimuth that observed p depends on the sensor pose at that
      // azimuth's time; a few fixed-point rounds resolve the cycle.
      double bearing = std::atan2(y, x);
      Eigen::Vector2d q = p;
      for (int iter = 0; iter < 3; ++iter) {
        double rev = wrap_angle(bearing);
        if (rev < 0.0) rev += 2.0 * kPi;
        const double tau = rev / (2.0 * kPi) * sweep;
        const Pose2 motion(body_velocity.dx * tau, body_velocity.dy * tau,
                           body_velocity.dtheta * tau);
        q = transform_point(inverse(motion), p);
        const double updated = std::atan2(q.y(), q.x());
        const bool done = std::abs(wrap_angle(updated - bearing)) < 1e-6;
        bearing = updated;
        if (done) break;
      }
      out.at(col, row) = static_cast<float>(sample_polar(scan, bearing, q.norm()));
    }
  }
  return out;
}

}  // namespace rslam
