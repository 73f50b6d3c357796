#pragma once

#include "rslam/se2.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace rslam {

struct OdometryEdge {
  int i = 0;  // earlier node
  int j = 0;  // later node
  Pose2 meas = Pose2::identity();  // relative pose, frame i -> frame j
  Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
  double dt = 0.0;        // s spanned by the measurement
  double bias_ref = 0.0;  // gyro bias already removed when meas was formed
};

struct LoopEdge {
  int i = 0;
  int j = 0;
  Pose2 meas = Pose2::identity();
  Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
};

struct GraphData {
  std::vector<Pose2> nodes;
  std::vector<OdometryEdge> odometry;
  std::vector<LoopEdge> loops;
  std::vector<double> bias_values;  // per odometry edge; empty means start at bias_ref
};

// Residual of a relative-pose measurement whose rotation is offset by
// rot_offset: r = Log(corrected_meas^-1 * Ti^-1 * Tj), theta wrapped.
Eigen::Vector3d pose_edge_residual(const Pose2& ti, const Pose2& tj, const Pose2& meas,
                                   double rot_offset = 0.0);

// Analytic derivatives of the residual above. jac_bias is the column for a
// bias variable b entering through rot_offset = d_offset_d_bias * b.
void pose_edge_jacobians(const Pose2& ti, const Pose2& tj, const Pose2& meas, double rot_offset,
                         double d_offset_d_bias, Eigen::Matrix3d& jac_i, Eigen::Matrix3d& jac_j,
                         Eigen::Vector3d& jac_bias);

struct PoseGraphParams {
  bool estimate_bias = false;
  // Rotation offset applied to odometry measurement m is
  // bias_correction_sign * (b_m - bias_ref_m) * dt_m.
  double bias_correction_sign = -1.0;
  double bias_random_walk_sigma = 1e-3;  // rad/s per sqrt(s), consecutive-bias drift
  std::vector<double> cauchy_schedule {10.0, 1.0};  // on whitened loop residuals
  int max_iterations = 50;  // per schedule entry
  double tol_dx = 1e-9;
  double initial_lambda = 1e-8;
};

struct OptimizeSummary {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<int> iterations_per_pass;
  bool converged = false;
};

// SE(2) pose graph with optional per-edge gyro bias states. Node 0 is the
// gauge anchor and never moves. Loop edges are reweighted with a Cauchy
// kernel (IRLS) over the schedule of kernel widths; odometry, bias-chain
// factors and everything else stay quadratic.
class PoseGraph {
 public:
  explicit PoseGraph(const PoseGraphParams& params = {});
  PoseGraph(const GraphData& data, const PoseGraphParams& params);

  int add_node(const Pose2& initial);
  void add_odometry_edge(const OdometryEdge& edge);
  void add_loop_edge(const LoopEdge& edge);

  OptimizeSummary optimize();

  const std::vector<Pose2>& poses() const { return poses_; }
  const std::vector<double>& biases() const { return biases_; }
  int num_nodes() const { return static_cast<int>(poses_.size()); }
  int num_loops() const { return static_cast<int>(loops_.size()); }

  // Total robust objective at the current estimate for kernel width c;
  // c = infinity turns every factor quadratic.
  double robust_cost(double c) const;
  // IRLS weight of each loop edge at the current estimate.
  std::vector<double> loop_weights(double c) const;

  GraphData data() const;
  const PoseGraphParams& params() const { return params_; }

 private:
  double evaluate(const std::vector<Pose2>& poses, const std::vector<double>& biases,
                  double c) const;
  bool iterate(double c, double& lambda, double& dx_norm);

  PoseGraphParams params_;
  std::vector<Pose2> poses_;
  std::vector<OdometryEdge> odometry_;
  std::vector<LoopEdge> loops_;
  std::vector<double> biases_;  // one per odometry edge when estimation is on
};

// Plain-text graph file: VERTEX_SE2 / EDGE_SE2 as commonly exchanged, with
// loop closures on EDGE_SE2_LOOP lines, biased odometry on EDGE_SE2_BIAS
// lines (dt and bias_ref appended), and bias states on VERTEX_BIAS lines.
void save_g2o(const std::string& path, const GraphData& data);
GraphData load_g2o(const std::string& path);

}  // namespace rslam
