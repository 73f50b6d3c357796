#include "rslam/evaluation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace rslam {

std::vector<std::pair<int, int>> associate_by_stamp(const Trajectory& reference,
                                                    const Trajectory& estimate, double max_dt) {
  std::vector<std::pair<int, int>> pairs;
  if (reference.empty()) return pairs;
  for (int e = 0; e < static_cast<int>(estimate.size()); ++e) {
    const double t = estimate[e].stamp;
    const auto it = std::lower_bound(
        reference.begin(), reference.end(), t,
        [](const TrajectorySample& s, double v) { return s.stamp < v; });
    int best = static_cast<int>(std::min<size_t>(it - reference.begin(), reference.size() - 1));
    if (it != reference.begin()) {
      const int prev = static_cast<int>(it - reference.begin()) - 1;
      if (std::abs(reference[prev].stamp - t) < std::abs(reference[best].stamp - t)) best = prev;
    }
    if (std::abs(reference[best].stamp - t) <= max_dt) pairs.emplace_back(best, e);
  }
  return pairs;
}

AteResult absolute_trajectory_error(const Trajectory& reference, const Trajectory& estimate,
                                    double max_dt) {
  const auto pairs = associate_by_stamp(reference, estimate, max_dt);
  if (pairs.size() < 2)
    throw std::invalid_argument("need at least two associated samples for alignment");

  const int n = static_cast<int>(pairs.size());
  Eigen::Matrix2Xd ref(2, n), est(2, n);
  for (int k = 0; k < n; ++k) {
    ref.col(k) = reference[pairs[k].first].pose.translation();
    est.col(k) = estimate[pairs[k].second].pose.translation();
  }
  const Eigen::Vector2d ref_mean = ref.rowwise().mean();
  const Eigen::Vector2d est_mean = est.rowwise().mean();
  const Eigen::Matrix2d cov =
      (ref.colwise() - ref_mean) * (est.colwise() - est_mean).transpose();

  Eigen::JacobiSVD<Eigen::Matrix2d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d d = Eigen::Matrix2d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(1, 1) = -1.0;
  const Eigen::Matrix2d rot = svd.matrixU() * d * svd.matrixV().transpose();
  const Eigen::Vector2d trans = ref_mean - rot * est_mean;

  double sq_sum = 0.0;
  for (int k = 0; k < n; ++k) sq_sum += (ref.col(k) - (rot * est.col(k) + trans)).squaredNorm();

  AteResult out;
  out.rmse = std::sqrt(sq_sum / n);
  out.alignment = Pose2(trans.x(), trans.y(), std::atan2(rot(1, 0), rot(0, 0)));
  out.matched = n;
  return out;
}

double end_point_error(const Trajectory& reference, const Trajectory& estimate, double max_dt) {
  const auto pairs = associate_by_stamp(reference, estimate, max_dt);
  if (pairs.size() < 2)
    throw std::invalid_argument("need at least two associated samples for the end-point error");
  const Pose2& ref_first = reference[pairs.front().first].pose;
  const Pose2& ref_last = reference[pairs.back().first].pose;
  const Pose2& est_first = estimate[pairs.front().second].pose;
  const Pose2& est_last = estimate[pairs.back().second].pose;
  const Pose2 gap = compose(inverse(between(ref_first, ref_last)), between(est_first, est_last));
  return gap.translation().norm();
}

RegistrationStats registration_stats(const std::vector<Pose2>& estimated,
                                     const std::vector<Pose2>& truth, double pos_tol,
                                     double rot_tol) {
  if (estimated.size() != truth.size())
    throw std::invalid_argument("estimate and truth counts differ");
  RegistrationStats stats;
  stats.total = static_cast<int>(estimated.size());
  double sq_pos = 0.0, sq_rot = 0.0;
  for (size_t k = 0; k < estimated.size(); ++k) {
    const Pose2 delta = between(truth[k], estimated[k]);
    const double pos = delta.translation().norm();
    const double rot = std::abs(delta.theta);
    if (pos < pos_tol && rot < rot_tol) {
      ++stats.inliers;
      sq_pos += pos * pos;
      sq_rot += rot * rot;
    }
  }
  stats.inlier_ratio = stats.total > 0 ? static_cast<double>(stats.inliers) / stats.total : 0.0;
  if (stats.inliers > 0) {
    stats.rmse_pos = std::sqrt(sq_pos / stats.inliers);
    stats.rmse_rot = std::sqrt(sq_rot / stats.inliers);
  }
  return stats;
}

void write_trajectory_svg(const std::string& path,
                          const std::vector<std::pair<std::string, Trajectory>>& named,
                          int width_px) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;
  bool first = true;
  for (const auto& [name, traj] : named) {
    for (const TrajectorySample& s : traj) {
      if (first) {
        min_x = max_x = s.pose.x;
        min_y = max_y = s.pose.y;
        first = false;
      }
      min_x = std::min(min_x, s.pose.x);
      max_x = std::max(max_x, s.pose.x);
      min_y = std::min(min_y, s.pose.y);
      max_y = std::max(max_y, s.pose.y);
    }
  }
  const double margin = 0.05 * std::max({max_x - min_x, max_y - min_y, 1.0});
  min_x -= margin;
  min_y -= margin;
  max_x += margin;
  max_y += margin;
  const double scale = width_px / (max_x - min_x);
  const int height_px = static_cast<int>(std::lround((max_y - min_y) * scale));

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << std::setprecision(8);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_px << "\" height=\""
      << height_px << "\" viewBox=\"0 0 " << width_px << ' ' << height_px << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  int color_idx = 0;
  int legend_y = 20;
  for (const auto& [name, traj] : named) {
    const char* color = kColors[color_idx++ % 5];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const TrajectorySample& s : traj)
      out << (s.pose.x - min_x) * scale << ',' << (max_y - s.pose.y) * scale << ' ';
    out << "\"/>\n";
    out << "<text x=\"12\" y=\"" << legend_y << "\" fill=\"" << color
        << "\" font-family=\"monospace\" font-size=\"14\">" << name << "</text>\n";
    legend_y += 18;
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace rslam
