#include "rslam/pose_graph.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

namespace rslam {

Eigen::Vector3d pose_edge_residual(const Pose2& ti, const Pose2& tj, const Pose2& meas,
                                   double rot_offset) {
  const double theta_m = meas.theta + rot_offset;
  const double gamma = ti.theta + theta_m;
  const Eigen::Vector2d d = tj.translation() - ti.translation();
  const Eigen::Vector2d rt =
      rotation2d(-gamma) * d - rotation2d(-theta_m) * meas.translation();
  return {rt.x(), rt.y(), wrap_angle(tj.theta - ti.theta - theta_m)};
}

void pose_edge_jacobians(const Pose2& ti, const Pose2& tj, const Pose2& meas, double rot_offset,
                         double d_offset_d_bias, Eigen::Matrix3d& jac_i, Eigen::Matrix3d& jac_j,
                         Eigen::Vector3d& jac_bias) {
  const double theta_m = meas.theta + rot_offset;
  const double gamma = ti.theta + theta_m;
  const Eigen::Vector2d d = tj.translation() - ti.translation();
  const Eigen::Matrix2d rot_ng = rotation2d(-gamma);
  const Eigen::Matrix2d drot_ng = rotation2d_deriv(-gamma);

  jac_i.setZero();
  jac_i.block<2, 2>(0, 0) = -rot_ng;
  jac_i.block<2, 1>(0, 2) = -drot_ng * d;
  jac_i(2, 2) = -1.0;

  jac_j.setZero();
  jac_j.block<2, 2>(0, 0) = rot_ng;
  jac_j(2, 2) = 1.0;

  // the measurement rotation shifts with the bias through rot_offset
  const Eigen::Vector2d d_rt_d_theta_m =
      -drot_ng * d + rotation2d_deriv(-theta_m) * meas.translation();
  jac_bias = {d_rt_d_theta_m.x() * d_offset_d_bias, d_rt_d_theta_m.y() * d_offset_d_bias,
              -d_offset_d_bias};
}

namespace {

double cauchy_rho(double squared, double c) {
  if (!std::isfinite(c)) return squared;
  return c * c * std::log1p(squared / (c * c));
}

double cauchy_weight(double squared, double c) {
  if (!std::isfinite(c)) return 1.0;
  return 1.0 / (1.0 + squared / (c * c));
}

}  // namespace

PoseGraph::PoseGraph(const PoseGraphParams& params) : params_(params) {}

PoseGraph::PoseGraph(const GraphData& data, const PoseGraphParams& params) : params_(params) {
  for (const Pose2& p : data.nodes) add_node(p);
  for (const OdometryEdge& e : data.odometry) add_odometry_edge(e);
  for (const LoopEdge& e : data.loops) add_loop_edge(e);
  if (!data.bias_values.empty()) {
    if (data.bias_values.size() != odometry_.size())
      throw std::invalid_argument("bias value count does not match odometry edge count");
    biases_ = data.bias_values;
  }
}

int PoseGraph::add_node(const Pose2& initial) {
  poses_.push_back(initial);
  return static_cast<int>(poses_.size()) - 1;
}

void PoseGraph::add_odometry_edge(const OdometryEdge& edge) {
  const int n = num_nodes();
  if (edge.i < 0 || edge.j < 0 || edge.i >= n || edge.j >= n || edge.i == edge.j)
    throw std::invalid_argument("odometry edge references invalid nodes");
  if (edge.dt < 0.0) throw std::invalid_argument("odometry edge dt must be non-negative");
  odometry_.push_back(edge);
  biases_.push_back(edge.bias_ref);
}

void PoseGraph::add_loop_edge(const LoopEdge& edge) {
  const int n = num_nodes();
  if (edge.i < 0 || edge.j < 0 || edge.i >= n || edge.j >= n || edge.i == edge.j)
    throw std::invalid_argument("loop edge references invalid nodes");
  loops_.push_back(edge);
}

double PoseGraph::evaluate(const std::vector<Pose2>& poses, const std::vector<double>& biases,
                           double c) const {
  double cost = 0.0;
  for (size_t m = 0; m < odometry_.size(); ++m) {
    const OdometryEdge& e = odometry_[m];
    const double offset = params_.bias_correction_sign * (biases[m] - e.bias_ref) * e.dt;
    const Eigen::Vector3d r = pose_edge_residual(poses[e.i], poses[e.j], e.meas, offset);
    cost += r.dot(e.information * r);
  }
  if (params_.estimate_bias) {
    const double sigma2 = params_.bias_random_walk_sigma * params_.bias_random_walk_sigma;
    for (size_t m = 0; m + 1 < odometry_.size(); ++m) {
      const double gap = std::max(odometry_[m + 1].dt, 1e-6);
      const double rb = biases[m] - biases[m + 1];
      cost += rb * rb / (sigma2 * gap);
    }
  }
  for (const LoopEdge& e : loops_) {
    const Eigen::Vector3d r = pose_edge_residual(poses[e.i], poses[e.j], e.meas, 0.0);
    cost += cauchy_rho(r.dot(e.information * r), c);
  }
  return cost;
}

bool PoseGraph::iterate(double c, double& lambda, double& dx_norm) {
  const int n = num_nodes();
  const int m_odo = static_cast<int>(odometry_.size());
  const int pose_dim = 3 * std::max(0, n - 1);
  const int dim = pose_dim + (params_.estimate_bias ? m_odo : 0);
  dx_norm = 0.0;
  if (dim == 0) return false;

  const auto pose_base = [](int k) { return 3 * (k - 1); };  // node 0 is fixed
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);

  struct Block {
    int base;
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac;
  };
  const auto accumulate = [&](const std::vector<Block>& blocks, const Eigen::Matrix3d& info,
                              const Eigen::Vector3d& r, double w) {
    for (const Block& a : blocks) {
      const Eigen::MatrixXd jt_info = w * a.jac.transpose() * info;
      grad.segment(a.base, a.jac.cols()) += jt_info * r;
      for (const Block& b : blocks) {
        const Eigen::MatrixXd h = jt_info * b.jac;
        for (int rr = 0; rr < h.rows(); ++rr)
          for (int cc = 0; cc < h.cols(); ++cc)
            trips.emplace_back(a.base + rr, b.base + cc, h(rr, cc));
      }
    }
  };

  double cost0 = 0.0;
  for (int m = 0; m < m_odo; ++m) {
    const OdometryEdge& e = odometry_[m];
    const double k_bias = params_.bias_correction_sign * e.dt;
    const double offset = k_bias * (biases_[m] - e.bias_ref);
    const Eigen::Vector3d r = pose_edge_residual(poses_[e.i], poses_[e.j], e.meas, offset);
    cost0 += r.dot(e.information * r);

    Eigen::Matrix3d ji, jj;
    Eigen::Vector3d jb;
    pose_edge_jacobians(poses_[e.i], poses_[e.j], e.meas, offset, k_bias, ji, jj, jb);
    std::vector<Block> blocks;
    if (e.i > 0) blocks.push_back({pose_base(e.i), ji});
    if (e.j > 0) blocks.push_back({pose_base(e.j), jj});
    if (params_.estimate_bias) blocks.push_back({pose_dim + m, jb});
    accumulate(blocks, e.information, r, 1.0);
  }

  if (params_.estimate_bias) {
    const double sigma2 = params_.bias_random_walk_sigma * params_.bias_random_walk_sigma;
    for (int m = 0; m + 1 < m_odo; ++m) {
      const double info = 1.0 / (sigma2 * std::max(odometry_[m + 1].dt, 1e-6));
      const double rb = biases_[m] - biases_[m + 1];
      cost0 += rb * rb * info;
      const int a = pose_dim + m, b = pose_dim + m + 1;
      trips.emplace_back(a, a, info);
      trips.emplace_back(b, b, info);
      trips.emplace_back(a, b, -info);
      trips.emplace_back(b, a, -info);
      grad(a) += info * rb;
      grad(b) -= info * rb;
    }
  }

  for (const LoopEdge& e : loops_) {
    const Eigen::Vector3d r = pose_edge_residual(poses_[e.i], poses_[e.j], e.meas, 0.0);
    const double sq = r.dot(e.information * r);
    cost0 += cauchy_rho(sq, c);
    const double w = cauchy_weight(sq, c);

    Eigen::Matrix3d ji, jj;
    Eigen::Vector3d jb;
    pose_edge_jacobians(poses_[e.i], poses_[e.j], e.meas, 0.0, 0.0, ji, jj, jb);
    std::vector<Block> blocks;
    if (e.i > 0) blocks.push_back({pose_base(e.i), ji});
    if (e.j > 0) blocks.push_back({pose_base(e.j), jj});
    accumulate(blocks, e.information, r, w);
  }

  Eigen::SparseMatrix<double> hessian(dim, dim);
  hessian.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd diag(dim);
  for (int i = 0; i < dim; ++i) diag(i) = std::max(hessian.coeff(i, i), 1e-12);

  for (int attempt = 0; attempt < 10; ++attempt) {
    Eigen::SparseMatrix<double> damped = hessian;
    for (int i = 0; i < dim; ++i) damped.coeffRef(i, i) += lambda * diag(i);

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(damped);
    if (solver.info() != Eigen::Success) {
      lambda *= 10.0;
      continue;
    }
    const Eigen::VectorXd dx = solver.solve(-grad);

    std::vector<Pose2> cand_poses = poses_;
    for (int k = 1; k < n; ++k) {
      const int b = pose_base(k);
      cand_poses[k] = Pose2(poses_[k].x + dx(b), poses_[k].y + dx(b + 1),
                            poses_[k].theta + dx(b + 2));
    }
    std::vector<double> cand_biases = biases_;
    if (params_.estimate_bias)
      for (int m = 0; m < m_odo; ++m) cand_biases[m] += dx(pose_dim + m);

    if (evaluate(cand_poses, cand_biases, c) < cost0) {
      poses_ = std::move(cand_poses);
      biases_ = std::move(cand_biases);
      lambda = std::max(lambda / 3.0, 1e-12);
      dx_norm = dx.lpNorm<Eigen::Infinity>();
      return true;
    }
    lambda *= 10.0;
  }
  return false;
}

OptimizeSummary PoseGraph::optimize() {
  std::vector<double> schedule = params_.cauchy_schedule;
  if (schedule.empty()) schedule.push_back(std::numeric_limits<double>::infinity());

  OptimizeSummary summary;
  summary.initial_cost = evaluate(poses_, biases_, schedule.back());
  for (double c : schedule) {
    double lambda = params_.initial_lambda;
    int it = 0;
    bool settled = false;
    for (; it < params_.max_iterations; ++it) {
      double dxn = 0.0;
      if (!iterate(c, lambda, dxn)) {
        settled = true;
        break;
      }
      if (dxn < params_.tol_dx) {
        settled = true;
        ++it;
        break;
      }
    }
    summary.iterations_per_pass.push_back(it);
    summary.converged = settled;
  }
  summary.final_cost = evaluate(poses_, biases_, schedule.back());
  return summary;
}

double PoseGraph::robust_cost(double c) const { return evaluate(poses_, biases_, c); }

std::vector<double> PoseGraph::loop_weights(double c) const {
  std::vector<double> w;
  w.reserve(loops_.size());
  for (const LoopEdge& e : loops_) {
    const Eigen::Vector3d r = pose_edge_residual(poses_[e.i], poses_[e.j], e.meas, 0.0);
    w.push_back(cauchy_weight(r.dot(e.information * r), c));
  }
  return w;
}

GraphData PoseGraph::data() const {
  GraphData d;
  d.nodes = poses_;
  d.odometry = odometry_;
  d.loops = loops_;
  d.bias_values = biases_;
  return d;
}

namespace {

void write_info(std::ostream& out, const Eigen::Matrix3d& info) {
  out << ' ' << info(0, 0) << ' ' << info(0, 1) << ' ' << info(0, 2) << ' ' << info(1, 1) << ' '
      << info(1, 2) << ' ' << info(2, 2);
}

Eigen::Matrix3d read_info(std::istream& in) {
  double i11, i12, i13, i22, i23, i33;
  in >> i11 >> i12 >> i13 >> i22 >> i23 >> i33;
  Eigen::Matrix3d info;
  info << i11, i12, i13, i12, i22, i23, i13, i23, i33;
  return info;
}

}  // namespace

void save_g2o(const std::string& path, const GraphData& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << std::setprecision(17);
  for (size_t i = 0; i < data.nodes.size(); ++i)
    out << "VERTEX_SE2 " << i << ' ' << data.nodes[i].x << ' ' << data.nodes[i].y << ' '
        << data.nodes[i].theta << '\n';
  for (size_t m = 0; m < data.bias_values.size(); ++m)
    out << "VERTEX_BIAS " << m << ' ' << data.bias_values[m] << '\n';
  for (size_t m = 0; m < data.odometry.size(); ++m) {
    const OdometryEdge& e = data.odometry[m];
    if (e.dt == 0.0 && e.bias_ref == 0.0) {
      out << "EDGE_SE2 " << e.i << ' ' << e.j << ' ' << e.meas.x << ' ' << e.meas.y << ' '
          << e.meas.theta;
    } else {
      out << "EDGE_SE2_BIAS " << e.i << ' ' << e.j << ' ' << e.meas.x << ' ' << e.meas.y << ' '
          << e.meas.theta << ' ' << e.dt << ' ' << e.bias_ref;
    }
    write_info(out, e.information);
    out << '\n';
  }
  for (const LoopEdge& e : data.loops) {
    out << "EDGE_SE2_LOOP " << e.i << ' ' << e.j << ' ' << e.meas.x << ' ' << e.meas.y << ' '
        << e.meas.theta;
    write_info(out, e.information);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

GraphData load_g2o(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  GraphData data;
  std::string tag;
  while (in >> tag) {
    if (tag == "VERTEX_SE2") {
      int id;
      double x, y, theta;
      in >> id >> x >> y >> theta;
      if (id != static_cast<int>(data.nodes.size()))
        throw std::runtime_error("vertex ids must be dense and ordered in " + path);
      data.nodes.emplace_back(x, y, theta);
    } else if (tag == "VERTEX_BIAS") {
      int id;
      double value;
      in >> id >> value;
      if (id != static_cast<int>(data.bias_values.size()))
        throw std::runtime_error("bias ids must be dense and ordered in " + path);
      data.bias_values.push_back(value);
    } else if (tag == "EDGE_SE2" || tag == "EDGE_SE2_BIAS") {
      OdometryEdge e;
      double x, y, theta;
      in >> e.i >> e.j >> x >> y >> theta;
      if (tag == "EDGE_SE2_BIAS") in >> e.dt >> e.bias_ref;
      e.meas = Pose2(x, y, theta);
      e.information = read_info(in);
      data.odometry.push_back(e);
    } else if (tag == "EDGE_SE2_LOOP") {
      LoopEdge e;
      double x, y, theta;
      in >> e.i >> e.j >> x >> y >> theta;
      e.meas = Pose2(x, y, theta);
      e.information = read_info(in);
      data.loops.push_back(e);
    } else {
      throw std::runtime_error("unknown record '" + tag + "' in " + path);
    }
    if (!in) throw std::runtime_error("malformed record in " + path);
  }
  return data;
}

}  // namespace rslam
