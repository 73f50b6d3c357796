#include "rslam/place_recognition.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace rslam {

Grid radon_sinogram(const Grid& image, const RadonParams& params) {
  if (image.width != image.height) throw std::invalid_argument("radon input must be square");
  if (params.n_angles <= 0) throw std::invalid_argument("need at least one projection angle");
  const int size = image.width;
  const int n_off = params.n_offsets > 0 ? params.n_offsets : size;
  const double c = (size - 1) / 2.0;
  const double half_span = size / 2.0;
  const int n_steps = size;

  Grid sino(n_off, params.n_angles);
  for (int k = 0; k < params.n_angles; ++k) {
    const double phi = kPi * k / params.n_angles;
    const double nx = std::cos(phi), ny = std::sin(phi);
    const double dx = -ny, dy = nx;  // along the integration line
    for (int j = 0; j < n_off; ++j) {
      const double s = j - (n_off - 1) / 2.0;
      double sum = 0.0;
      for (int t = 0; t < n_steps; ++t) {
        const double along = -half_span + (t + 0.5) * (2.0 * half_span / n_steps);
        sum += sample_bilinear_px(image, c + s * nx + along * dx, c + s * ny + along * dy);
      }
      sino.at(j, k) = static_cast<float>(sum * (2.0 * half_span / n_steps));
    }
  }
  return sino;
}

Eigen::MatrixXd radon_descriptor(const Grid& image, const DescriptorParams& params) {
  const Grid sino = radon_sinogram(image, params.radon);
  const int n_off = sino.width;
  if (params.keep_bins <= 0 || params.keep_bins > n_off / 2)
    throw std::invalid_argument("keep_bins must be in [1, n_offsets / 2]");

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  std::vector<double> row(n_off);
  Eigen::MatrixXd desc(sino.height, params.keep_bins);
  for (int k = 0; k < sino.height; ++k) {
    for (int j = 0; j < n_off; ++j) row[j] = sino.at(j, k);
    fft.fwd(spectrum, row);
    for (int b = 0; b < params.keep_bins; ++b) desc(k, b) = std::abs(spectrum[b + 1]);
  }
  return desc;
}

DescriptorMatch match_descriptors(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("descriptor shapes differ");
  const int rows = static_cast<int>(a.rows());
  // Every map shares a similar radial-spectrum envelope, so correlate only the
  // per-frequency variation across angles. Column means are invariant to the
  // circular row shift a rotation causes, so the invariances survive.
  const Eigen::MatrixXd a0 = a.rowwise() - a.colwise().mean();
  const Eigen::MatrixXd b0 = b.rowwise() - b.colwise().mean();
  const double denom = a0.norm() * b0.norm();

  DescriptorMatch best;
  if (denom < 1e-12) return best;
  best.score = -2.0;
  for (int shift = 0; shift < rows; ++shift) {
    double dot = 0.0;
    for (int r = 0; r < rows; ++r) dot += a0.row(r).dot(b0.row((r + shift) % rows));
    const double score = dot / denom;
    if (score > best.score) {
      best.score = score;
      best.shift = shift;
    }
  }
  // Row r of b matches row r + shift of a's angle axis, which spans pi.
  best.rotation = wrap_angle(kPi * best.shift / rows);
  return best;
}

int KeyframeDatabase::add(Keyframe kf) {
  kf.id = static_cast<int>(frames_.size());
  frames_.push_back(std::move(kf));
  return frames_.back().id;
}

std::optional<LoopCandidate> KeyframeDatabase::query(int query_id) const {
  const Keyframe& q = frames_.at(static_cast<size_t>(query_id));
  std::optional<LoopCandidate> best;
  for (const Keyframe& cand : frames_) {
    if (cand.id == query_id) continue;
    const double travel_gap = std::abs(q.travel_distance - cand.travel_distance);
    if (travel_gap < params_.min_travel_separation) continue;
    const double radius =
        std::max(params_.base_radius, params_.radius_growth * travel_gap);
    if ((q.odom_pose.translation() - cand.odom_pose.translation()).norm() > radius) continue;

    const DescriptorMatch m = match_descriptors(q.descriptor, cand.descriptor);
    if (!best || m.score > best->score) {
      best = LoopCandidate{query_id, cand.id, m.score, m.rotation};
    }
  }
  return best;
}

}  // namespace rslam
