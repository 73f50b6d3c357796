#include "rslam/pipeline.hpp"

#include <chrono>
#include <condition_variable>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <utility>

namespace rslam {

int RunReport::loops_closed() const {
  int n = 0;
  for (const LoopEvent& e : loops)
    if (e.accepted) ++n;
  return n;
}

namespace {

using Clock = std::chrono::steady_clock;

double lap(Clock::time_point& t0) {
  const Clock::time_point t1 = Clock::now();
  const double s = std::chrono::duration<double>(t1 - t0).count();
  t0 = t1;
  return s;
}

struct LoopAttempt {
  bool attempted = false;  // a gated candidate existed
  LoopEvent event;
  bool accepted = false;
  LoopEdge edge;
};

LoopAttempt attempt_loop(const KeyframeDatabase& db, int query_id, const PipelineParams& params,
                         const Eigen::Matrix3d& loop_info, StageTiming& timing) {
  Clock::time_point t0 = Clock::now();
  LoopAttempt out;
  const std::optional<LoopCandidate> cand = db.query(query_id);
  timing.retrieval += lap(t0);
  if (!cand) return out;
  out.attempted = true;

  const Keyframe& query = db.keyframe(query_id);
  const Keyframe& match = db.keyframe(cand->match_id);
  LoopEvent& ev = out.event;
  ev.query_frame = query.frame_index;
  ev.match_frame = match.frame_index;
  ev.descriptor_score = cand->score;

  const CoarseResult coarse = coarse_register(match.map_snapshot, query.map_snapshot,
                                              query.map_resolution, params.coarse);
  timing.coarse += lap(t0);
  ev.coarse_valid = coarse.valid;
  ev.coarse_inliers = coarse.inliers;
  ev.coarse_matches = coarse.n_matches;
  ev.coarse_scale = coarse.scale;
  if (!coarse.valid) return out;

  Pose2 measured = coarse.pose;
  if (!params.coarse_only) {
    // The scaled score normalizes by query mass, so the sparser snapshot acts
    // as the query: the gate then asks whether its structure is contained in
    // the richer map instead of punishing content the old map never saw.
    const bool swap = query_mass(match.map_snapshot) < query_mass(query.map_snapshot);
    const Grid& ref = swap ? query.map_snapshot : match.map_snapshot;
    const Grid& qry = swap ? match.map_snapshot : query.map_snapshot;
    const Pose2 init = swap ? inverse(coarse.pose) : coarse.pose;
    const RegistrationResult fine =
        register_maps(ref, qry, query.map_resolution, init, params.fine);
    timing.fine += lap(t0);
    ev.fine_scaled = fine.scaled;
    if (!fine.accepted) return out;
    measured = swap ? inverse(fine.pose) : fine.pose;
  }

  ev.accepted = true;
  ev.relative = measured;
  out.accepted = true;
  out.edge = LoopEdge{match.frame_index, query.frame_index, measured, loop_info};
  return out;
}

// Per-frame odometry bookkeeping shared by both execution modes.
struct FrameTracker {
  explicit FrameTracker(const PipelineParams& params)
      : params_(params), odo_(params.odometry), rng_(params.inject_noise_seed),
        inject_(params.inject_odometry_noise.norm() > 0.0) {}

  void set_gyro(const std::vector<GyroSample>& gyro) { odo_.add_gyro(gyro); }

  struct Step {
    OdometryFrame frame;
    Pose2 relative;    // possibly perturbed; what the graph sees
    Pose2 chain_pose;  // integrated perturbed odometry
  };

  Step step(const PolarScan& scan) {
    Step s;
    s.frame = odo_.process(scan);
    s.relative = s.frame.relative;
    if (s.frame.index > 0 && inject_) {
      std::normal_distribution<double> unit(0.0, 1.0);
      const Eigen::Vector3d& sig = params_.inject_odometry_noise;
      s.relative = compose(s.relative,
                           Pose2(sig.x() * unit(rng_), sig.y() * unit(rng_), sig.z() * unit(rng_)));
    }
    chain_ = s.frame.index == 0 ? Pose2::identity() : compose(chain_, s.relative);
    s.chain_pose = chain_;
    if (s.frame.index > 0) travel_ += s.relative.translation().norm();
    return s;
  }

  Keyframe make_keyframe(const Step& s) const {
    Keyframe kf;
    kf.frame_index = s.frame.index;
    kf.stamp = s.frame.stamp;
    kf.odom_pose = s.chain_pose;
    kf.travel_distance = travel_;
    kf.map_snapshot = odo_.map().grid();
    kf.map_resolution = odo_.map().resolution();
    kf.descriptor = radon_descriptor(kf.map_snapshot, params_.place.descriptor);
    return kf;
  }

  double travel() const { return travel_; }

 private:
  const PipelineParams& params_;
  Odometry odo_;
  std::mt19937_64 rng_;
  bool inject_ = false;
  Pose2 chain_ = Pose2::identity();
  double travel_ = 0.0;
};

void finalize_report(RunReport& rep, PoseGraph& graph, const PipelineParams& params) {
  if (graph.num_loops() > 0) {
    Clock::time_point t0 = Clock::now();
    graph.optimize();
    rep.timing.solve += lap(t0);
    ++rep.solve_count;
  }
  rep.optimized.clear();
  for (size_t m = 0; m < graph.poses().size(); ++m)
    rep.optimized.push_back({rep.odometry[m].stamp, graph.poses()[m]});
  const double c_last =
      params.graph.cauchy_schedule.empty() ? std::numeric_limits<double>::infinity()
                                           : params.graph.cauchy_schedule.back();
  rep.final_loop_weights = graph.loop_weights(c_last);
  if (params.graph.estimate_bias) rep.biases = graph.biases();
  rep.graph = graph.data();
}

RunReport run_serial(const std::vector<PolarScan>& scans, const std::vector<GyroSample>& gyro,
                     const PipelineParams& params) {
  FrameTracker tracker(params);
  tracker.set_gyro(gyro);
  KeyframeDatabase db(params.place);
  PoseGraph graph(params.graph);
  const Eigen::Matrix3d loop_info =
      (params.odometry.information / params.loop_covariance_scale).asDiagonal();

  RunReport rep;
  for (const PolarScan& scan : scans) {
    Clock::time_point t0 = Clock::now();
    const FrameTracker::Step s = tracker.step(scan);
    rep.timing.odometry += lap(t0);
    const int m = s.frame.index;
    if (m == 0) {
      graph.add_node(Pose2::identity());
    } else {
      graph.add_node(compose(graph.poses().back(), s.relative));
      graph.add_odometry_edge({m - 1, m, s.relative, s.frame.information,
                               scan.stamp - rep.odometry.back().stamp, s.frame.bias_used});
    }
    rep.odometry.push_back({scan.stamp, s.chain_pose});

    if (m % params.keyframe_stride != 0) continue;
    t0 = Clock::now();
    const int kf_id = db.add(tracker.make_keyframe(s));
    rep.timing.keyframing += lap(t0);
    rep.keyframe_frames.push_back(m);
    const LoopAttempt attempt = attempt_loop(db, kf_id, params, loop_info, rep.timing);
    if (attempt.attempted) rep.loops.push_back(attempt.event);
    if (attempt.accepted) {
      graph.add_loop_edge(attempt.edge);
      if (params.optimize_per_loop) {
        t0 = Clock::now();
        graph.optimize();
        rep.timing.solve += lap(t0);
        ++rep.solve_count;
      }
    }
  }
  rep.travel_distance = tracker.travel();
  finalize_report(rep, graph, params);
  return rep;
}

RunReport run_threaded(const std::vector<PolarScan>& scans, const std::vector<GyroSample>& gyro,
                       const PipelineParams& params) {
  FrameTracker tracker(params);
  tracker.set_gyro(gyro);
  const Eigen::Matrix3d loop_info =
      (params.odometry.information / params.loop_covariance_scale).asDiagonal();

  // Shared state. The retrieval mailbox holds at most one keyframe; frames
  // arriving while the worker is busy simply produce no keyframe.
  std::mutex mx;
  std::condition_variable cv;
  std::optional<Keyframe> mailbox;
  bool retrieval_busy = false;
  std::vector<LoopEdge> pending_loops;
  bool done = false;

  GraphData state;  // current estimate plus all factors
  RunReport rep;

  std::thread retrieval([&] {
    KeyframeDatabase db(params.place);
    StageTiming local;
    for (;;) {
      std::unique_lock lk(mx);
      cv.wait(lk, [&] { return mailbox.has_value() || done; });
      if (!mailbox) {
        rep.timing.retrieval += local.retrieval;
        rep.timing.coarse += local.coarse;
        rep.timing.fine += local.fine;
        return;
      }
      Keyframe kf = std::move(*mailbox);
      mailbox.reset();
      retrieval_busy = true;
      lk.unlock();

      const int kf_id = db.add(std::move(kf));
      const LoopAttempt attempt = attempt_loop(db, kf_id, params, loop_info, local);

      lk.lock();
      if (attempt.attempted) rep.loops.push_back(attempt.event);
      if (attempt.accepted) pending_loops.push_back(attempt.edge);
      retrieval_busy = false;
      cv.notify_all();
    }
  });

  std::thread solver([&] {
    double solve_s = 0.0;
    int solves = 0;
    for (;;) {
      GraphData snapshot;
      {
        std::unique_lock lk(mx);
        cv.wait(lk, [&] { return !pending_loops.empty() || done; });
        if (pending_loops.empty()) {
          rep.timing.solve += solve_s;
          rep.solve_count += solves;
          return;
        }
        for (LoopEdge& e : pending_loops) state.loops.push_back(e);
        pending_loops.clear();
        snapshot = state;
      }

      Clock::time_point t0 = Clock::now();
      PoseGraph graph(snapshot, params.graph);
      graph.optimize();
      solve_s += lap(t0);
      ++solves;

      std::unique_lock lk(mx);
      // Nodes added while solving keep their relative chaining off the last
      // solved node.
      const size_t solved = graph.poses().size();
      for (size_t k = 0; k < solved; ++k) state.nodes[k] = graph.poses()[k];
      for (size_t k = solved; k < state.nodes.size(); ++k)
        state.nodes[k] = compose(state.nodes[k - 1], state.odometry[k - 1].meas);
      for (size_t m = 0; m < graph.biases().size(); ++m)
        state.bias_values[m] = graph.biases()[m];
    }
  });

  for (const PolarScan& scan : scans) {
    Clock::time_point t0 = Clock::now();
    const FrameTracker::Step s = tracker.step(scan);
    const double odo_s = lap(t0);
    const int m = s.frame.index;
    bool make_kf = false;
    {
      std::unique_lock lk(mx);
      rep.timing.odometry += odo_s;
      if (m == 0) {
        state.nodes.push_back(Pose2::identity());
      } else {
        state.nodes.push_back(compose(state.nodes.back(), s.relative));
        state.odometry.push_back({m - 1, m, s.relative, s.frame.information,
                                  scan.stamp - rep.odometry.back().stamp, s.frame.bias_used});
        state.bias_values.push_back(s.frame.bias_used);
      }
      rep.odometry.push_back({scan.stamp, s.chain_pose});
      make_kf = !mailbox.has_value() && !retrieval_busy;
    }
    if (make_kf) {
      t0 = Clock::now();
      Keyframe kf = tracker.make_keyframe(s);
      const double kf_s = lap(t0);
      std::unique_lock lk(mx);
      rep.timing.keyframing += kf_s;
      mailbox = std::move(kf);
      rep.keyframe_frames.push_back(m);
      cv.notify_all();
    }
  }

  {
    // let the retrieval worker finish its last task so its loop lands
    std::unique_lock lk(mx);
    cv.wait(lk, [&] { return !mailbox.has_value() && !retrieval_busy; });
    done = true;
    cv.notify_all();
  }
  retrieval.join();
  {
    std::unique_lock lk(mx);
    cv.notify_all();
  }
  solver.join();

  rep.travel_distance = tracker.travel();
  PoseGraph graph(state, params.graph);
  finalize_report(rep, graph, params);
  return rep;
}

}  // namespace

RunReport run_slam(const std::vector<PolarScan>& scans, const std::vector<GyroSample>& gyro,
                   const PipelineParams& params) {
  if (scans.empty()) throw std::invalid_argument("no scans to process");
  if (params.keyframe_stride <= 0) throw std::invalid_argument("keyframe stride must be positive");
  return params.threaded ? run_threaded(scans, gyro, params) : run_serial(scans, gyro, params);
}

}  // namespace rslam
