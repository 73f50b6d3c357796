#pragma once

#include "rslam/grid.hpp"
#include "rslam/se2.hpp"

#include <Eigen/Core>

#include <vector>

namespace rslam {

// Correlation of two Cartesian intensity rasters sharing one resolution.
// T maps query-frame metric points into the reference frame; every non-zero
// query pixel contributes reference(T * p) * query(p), with the reference
// read bilinearly and zero outside. The scaled score divides by the query's
// squared mass, so 1.0 means the query lies on identical reference content.

double correlation_score(const Grid& reference, const Grid& query, double resolution,
                         const Pose2& T);

struct ScoreAndGradient {
  double score = 0.0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();  // d score / d (x, y, theta)
};

ScoreAndGradient correlation_score_gradient(const Grid& reference, const Grid& query,
                                            double resolution, const Pose2& T);

double query_mass(const Grid& query);  // sum of squared intensities

struct SearchParams {
  double trans_span = 2.0;                 // m, +/- around the initial guess
  double trans_step = 0.5;                 // m
  double rot_span = 3.0 * kPi / 180.0;     // rad
  double rot_step = 1.0 * kPi / 180.0;     // rad
};

// Exhaustive score maximization over the offset lattice. Ties keep the offset
// closest to the lattice center.
Pose2 grid_search(const Grid& reference, const Grid& query, double resolution, const Pose2& init,
                  const SearchParams& params);

struct RefineParams {
  int max_iters = 150;
  double initial_step = 0.0;   // m; 0 means one pixel
  double min_step = 1e-4;      // m, convergence threshold
  bool lock_rotation = false;  // optimize translation only
};

struct RefineResult {
  Pose2 pose = Pose2::identity();
  double score = 0.0;   // raw correlation at the optimum
  double scaled = 0.0;  // score / query_mass
  int iters = 0;
  bool converged = false;
  std::vector<double> score_history;  // score at init and after each accepted step
};

// Gradient ascent on the correlation score. Steps follow the gradient with
// rotation measured in units of the map half-extent; a step is only taken if
// it raises the score, otherwise the step length halves, so the history is
// strictly increasing past the first entry.
RefineResult refine_registration(const Grid& reference, const Grid& query, double resolution,
                                 const Pose2& init, const RefineParams& params = {});

struct RegistrationParams {
  bool use_search = true;
  SearchParams search;
  RefineParams refine;
  double min_scaled_score = 0.5;  // acceptance gate on the scaled score
};

struct RegistrationResult {
  Pose2 pose = Pose2::identity();
  double score = 0.0;
  double scaled = 0.0;
  bool accepted = false;
  int iters = 0;
};

// Optional lattice search followed by gradient refinement, then the scaled
// score gate. Throws std::invalid_argument if the query has zero mass.
RegistrationResult register_maps(const Grid& reference, const Grid& query, double resolution,
                                 const Pose2& init, const RegistrationParams& params = {});

}  // namespace rslam
