#include "rslam/coarse_reg.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <random>
#include <stdexcept>

namespace rslam {

namespace {

struct Similarity {
  double scale = 1.0;
  double theta = 0.0;
  Eigen::Vector2d t = Eigen::Vector2d::Zero();

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const {
    return scale * (rotation2d(theta) * p) + t;
  }
};

Similarity from_two_pairs(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                          const Eigen::Vector2d& q1, const Eigen::Vector2d& q2) {
  const Eigen::Vector2d dp = p2 - p1;
  const Eigen::Vector2d dq = q2 - q1;
  Similarity s;
  s.scale = dq.norm() / dp.norm();
  s.theta = std::atan2(dq.y(), dq.x()) - std::atan2(dp.y(), dp.x());
  s.t = q1 - s.scale * (rotation2d(s.theta) * p1);
  return s;
}

std::vector<int> inliers_of(const Similarity& sim, const std::vector<Eigen::Vector2d>& p,
                            const std::vector<Eigen::Vector2d>& q, double tol) {
  std::vector<int> in;
  for (size_t i = 0; i < p.size(); ++i)
    if ((q[i] - sim.apply(p[i])).norm() <= tol) in.push_back(static_cast<int>(i));
  return in;
}

}  // namespace

CoarseResult ransac_similarity(const std::vector<SiftKeypoint>& query_kps,
                               const std::vector<SiftKeypoint>& reference_kps,
                               const std::vector<FeatureMatch>& matches, int image_size,
                               double resolution, const RansacParams& params) {
  CoarseResult res;
  res.n_matches = static_cast<int>(matches.size());
  if (res.n_matches < 2) return res;

  // centered metric coordinates; p from the query image, q from the reference
  const int c = image_size / 2;
  std::vector<Eigen::Vector2d> p(matches.size()), q(matches.size());
  for (size_t i = 0; i < matches.size(); ++i) {
    const SiftKeypoint& kq = query_kps.at(static_cast<size_t>(matches[i].query_idx));
    const SiftKeypoint& kr = reference_kps.at(static_cast<size_t>(matches[i].train_idx));
    p[i] = Eigen::Vector2d(kq.x - c, kq.y - c) * resolution;
    q[i] = Eigen::Vector2d(kr.x - c, kr.y - c) * resolution;
  }
  const double tol = params.inlier_tolerance_px * resolution;
  const double min_baseline = 4.0 * resolution;  // hypothesis pairs closer than this are unstable

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<int> pick(0, res.n_matches - 1);
  std::vector<int> best_inliers;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    const int i = pick(rng);
    int j = pick(rng);
    if (i == j) continue;
    if ((p[i] - p[j]).norm() < min_baseline || (q[i] - q[j]).norm() < min_baseline) continue;
    const Similarity hyp = from_two_pairs(p[i], p[j], q[i], q[j]);
    std::vector<int> in = inliers_of(hyp, p, q, tol);
    if (in.size() > best_inliers.size()) best_inliers = std::move(in);
  }
  if (static_cast<int>(best_inliers.size()) < 2) return res;

  // least-squares similarity refit on the consensus set
  Eigen::Matrix2Xd src(2, best_inliers.size()), dst(2, best_inliers.size());
  for (size_t k = 0; k < best_inliers.size(); ++k) {
    src.col(k) = p[static_cast<size_t>(best_inliers[k])];
    dst.col(k) = q[static_cast<size_t>(best_inliers[k])];
  }
  const Eigen::Matrix3d fit = Eigen::umeyama(src, dst, true);
  Similarity refined;
  refined.scale = std::sqrt(std::abs(fit.block<2, 2>(0, 0).determinant()));
  refined.theta = std::atan2(fit(1, 0), fit(0, 0));
  refined.t = fit.block<2, 1>(0, 2);

  res.inlier_indices = inliers_of(refined, p, q, tol);
  res.inliers = static_cast<int>(res.inlier_indices.size());
  res.scale = refined.scale;
  res.pose = Pose2(refined.t.x(), refined.t.y(), refined.theta);
  res.valid = res.inliers >= params.min_inliers &&
              std::abs(refined.scale - 1.0) <= params.max_scale_deviation;
  return res;
}

CoarseResult coarse_register(const Grid& reference, const Grid& query, double resolution,
                             const CoarseRegParams& params) {
  if (reference.width != query.width || reference.height != query.height ||
      reference.width != reference.height)
    throw std::invalid_argument("coarse registration expects square rasters of equal size");
  const std::vector<SiftKeypoint> ref_kps = detect_sift(reference, params.sift);
  const std::vector<SiftKeypoint> query_kps = detect_sift(query, params.sift);
  const std::vector<FeatureMatch> matches =
      match_features(query_kps, ref_kps, params.match_ratio);
  return ransac_similarity(query_kps, ref_kps, matches, reference.width, resolution,
                           params.ransac);
}

}  // namespace rslam
