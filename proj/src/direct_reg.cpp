#include "rslam/direct_reg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rslam {

namespace {

// Non-zero query pixels with their metric coordinates, gathered once per
// registration so score evaluations touch only occupied cells.
struct ActivePixels {
  std::vector<Eigen::Vector2d> points;
  std::vector<float> values;
  double sum_sq = 0.0;

  ActivePixels(const Grid& query, double resolution) {
    const int cx = query.width / 2;
    const int cy = query.height / 2;
    for (int row = 0; row < query.height; ++row) {
      for (int col = 0; col < query.width; ++col) {
        const float v = query.at(col, row);
        if (v == 0.0f) continue;
        points.emplace_back((col - cx) * resolution, (row - cy) * resolution);
        values.push_back(v);
        sum_sq += static_cast<double>(v) * v;
      }
    }
  }
};

double eval_score(const Grid& reference, const ActivePixels& active, double resolution,
                  const Pose2& T) {
  const Eigen::Matrix2d rot = T.rotation();
  const Eigen::Vector2d trans = T.translation();
  const int cx = reference.width / 2;
  const int cy = reference.height / 2;
  double sum = 0.0;
  for (size_t i = 0; i < active.points.size(); ++i) {
    const Eigen::Vector2d q = rot * active.points[i] + trans;
    sum += active.values[i] *
           sample_bilinear_px(reference, q.x() / resolution + cx, q.y() / resolution + cy);
  }
  return sum;
}

ScoreAndGradient eval_score_gradient(const Grid& reference, const ActivePixels& active,
                                     double resolution, const Pose2& T) {
  const Eigen::Matrix2d rot = T.rotation();
  const Eigen::Matrix2d drot = rotation2d_deriv(T.theta);
  const Eigen::Vector2d trans = T.translation();
  const int cx = reference.width / 2;
  const int cy = reference.height / 2;
  ScoreAndGradient out;
  for (size_t i = 0; i < active.points.size(); ++i) {
    const Eigen::Vector2d& p = active.points[i];
    const Eigen::Vector2d q = rot * p + trans;
    const double px = q.x() / resolution + cx;
    const double py = q.y() / resolution + cy;
    const double v = active.values[i];
    out.score += v * sample_bilinear_px(reference, px, py);
    const Eigen::Vector2d g = bilinear_gradient_px(reference, px, py) / resolution;
    out.gradient.x() += v * g.x();
    out.gradient.y() += v * g.y();
    out.gradient.z() += v * g.dot(drot * p);
  }
  return out;
}

}  // namespace

double correlation_score(const Grid& reference, const Grid& query, double resolution,
                         const Pose2& T) {
  return eval_score(reference, ActivePixels(query, resolution), resolution, T);
}

ScoreAndGradient correlation_score_gradient(const Grid& reference, const Grid& query,
                                            double resolution, const Pose2& T) {
  return eval_score_gradient(reference, ActivePixels(query, resolution), resolution, T);
}

double query_mass(const Grid& query) {
  double sum = 0.0;
  for (float v : query.data) sum += static_cast<double>(v) * v;
  return sum;
}

namespace {

Pose2 searched(const Grid& reference, const ActivePixels& active, double resolution,
               const Pose2& init, const SearchParams& params) {
  const int nt = std::max(0, static_cast<int>(std::lround(params.trans_span / params.trans_step)));
  const int nr = std::max(0, static_cast<int>(std::lround(params.rot_span / params.rot_step)));
  Pose2 best = init;
  double best_score = eval_score(reference, active, resolution, init);
  int best_d2 = 0;  // ties keep the offset closest to the lattice center
  for (int ir = -nr; ir <= nr; ++ir) {
    for (int iy = -nt; iy <= nt; ++iy) {
      for (int ix = -nt; ix <= nt; ++ix) {
        if (ir == 0 && iy == 0 && ix == 0) continue;
        const Pose2 cand(init.x + ix * params.trans_step, init.y + iy * params.trans_step,
                         init.theta + ir * params.rot_step);
        const double s = eval_score(reference, active, resolution, cand);
        const int d2 = ix * ix + iy * iy + ir * ir;
        if (s > best_score || (s == best_score && d2 < best_d2)) {
          best_score = s;
          best = cand;
          best_d2 = d2;
        }
      }
    }
  }
  return best;
}

RefineResult refined(const Grid& reference, const ActivePixels& active, double resolution,
                     const Pose2& init, const RefineParams& params) {
  // Rotation is folded into the step metric via the map half-extent, so one
  // step length bounds the displacement of any query pixel.
  const double lever =
      0.5 * resolution * std::max(reference.width, reference.height);
  const double max_step = 4.0 * resolution;
  double step = params.initial_step > 0.0 ? params.initial_step : resolution;

  RefineResult res;
  res.pose = init;
  ScoreAndGradient cur = eval_score_gradient(reference, active, resolution, init);
  res.score_history.push_back(cur.score);

  // Gradient probe first; compass probes rescue the climb where the bilinear
  // surface kinks and the within-cell gradient points away from the peak.
  // The step only halves when no probe improves, so termination means a local
  // max to within min_step along every axis.
  for (res.iters = 0; res.iters < params.max_iters; ++res.iters) {
    Pose2 best_pose = res.pose;
    double best = cur.score;

    Eigen::Vector3d dir = cur.gradient;
    if (params.lock_rotation) dir.z() = 0.0;
    dir.z() *= lever;  // now in meters across all three entries
    const double norm = dir.norm();
    if (norm > 1e-300) {
      dir *= step / norm;
      const Pose2 cand(res.pose.x + dir.x(), res.pose.y + dir.y(),
                       res.pose.theta + dir.z() / lever);
      const double s = eval_score(reference, active, resolution, cand);
      if (s > best) {
        best = s;
        best_pose = cand;
      }
    }
    if (best == cur.score) {
      const int n_probes = params.lock_rotation ? 4 : 6;
      for (int k = 0; k < n_probes; ++k) {
        const double d = (k & 1) ? -step : step;
        Pose2 cand = res.pose;
        if (k < 2) cand.x += d;
        else if (k < 4) cand.y += d;
        else cand.theta += d / lever;
        const double s = eval_score(reference, active, resolution, cand);
        if (s > best) {
          best = s;
          best_pose = cand;
        }
      }
    }

    if (best > cur.score) {
      res.pose = best_pose;
      cur = eval_score_gradient(reference, active, resolution, best_pose);
      res.score_history.push_back(cur.score);
      step = std::min(step * 1.5, max_step);
    } else {
      step *= 0.5;
      if (step < params.min_step) {
        res.converged = true;
        break;
      }
    }
  }
  res.score = cur.score;
  res.scaled = active.sum_sq > 0.0 ? cur.score / active.sum_sq : 0.0;
  return res;
}

}  // namespace

Pose2 grid_search(const Grid& reference, const Grid& query, double resolution, const Pose2& init,
                  const SearchParams& params) {
  if (params.trans_step <= 0.0 || params.rot_step <= 0.0)
    throw std::invalid_argument("search steps must be positive");
  return searched(reference, ActivePixels(query, resolution), resolution, init, params);
}

RefineResult refine_registration(const Grid& reference, const Grid& query, double resolution,
                                 const Pose2& init, const RefineParams& params) {
  return refined(reference, ActivePixels(query, resolution), resolution, init, params);
}

RegistrationResult register_maps(const Grid& reference, const Grid& query, double resolution,
                                 const Pose2& init, const RegistrationParams& params) {
  const ActivePixels active(query, resolution);
  if (active.sum_sq <= 0.0) throw std::invalid_argument("query raster has zero mass");

  Pose2 start = init;
  if (params.use_search) start = searched(reference, active, resolution, init, params.search);
  const RefineResult fine = refined(reference, active, resolution, start, params.refine);

  RegistrationResult out;
  out.pose = fine.pose;
  out.score = fine.score;
  out.scaled = fine.scaled;
  out.iters = fine.iters;
  out.accepted = fine.scaled >= params.min_scaled_score;
  return out;
}

}  // namespace rslam
