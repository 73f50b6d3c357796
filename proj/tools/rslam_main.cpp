#include "rslam/config.hpp"
#include "rslam/evaluation.hpp"
#include "rslam/pipeline.hpp"
#include "rslam/scan_io.hpp"
#include "rslam/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

rslam::Config load_or_default(const std::string& config_path) {
  if (config_path.empty()) return rslam::parse_config_json("{}");
  return rslam::load_config(config_path);
}

double half_scan_period(const rslam::Trajectory& traj) {
  if (traj.size() < 2) return 0.125;
  std::vector<double> gaps;
  for (size_t i = 1; i < traj.size(); ++i) gaps.push_back(traj[i].stamp - traj[i - 1].stamp);
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return 0.5 * gaps[gaps.size() / 2];
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, long long seed) {
  rslam::Config cfg = load_or_default(config_path);
  if (seed >= 0) cfg.simulate.sequence.seed = static_cast<std::uint64_t>(seed);
  const rslam::World world = rslam::generate_world(cfg.simulate.world_seed, cfg.simulate.world);
  const rslam::SimulatedSequence seq =
      rslam::simulate_sequence(world, cfg.simulate.waypoints, cfg.simulate.sequence);
  rslam::save_sequence(out_dir, seq);
  std::cout << "wrote " << seq.scans.size() << " scans, " << seq.gyro.size()
            << " gyro samples, path length " << seq.path_length << " m to " << out_dir << "\n";
  return 0;
}

json trajectory_metrics(const rslam::Trajectory& reference, const rslam::Trajectory& estimate,
                        double max_dt) {
  const rslam::AteResult ate = rslam::absolute_trajectory_error(reference, estimate, max_dt);
  json j;
  j["ate_rmse"] = ate.rmse;
  j["matched"] = ate.matched;
  j["end_point_error"] = rslam::end_point_error(reference, estimate, max_dt);
  return j;
}

struct RunFlags {
  bool no_gyro = false;      // odometry ignores the gyro; graph drops bias states
  bool no_bias = false;      // graph keeps biases frozen at their odometry values
  bool coarse_only = false;  // loop poses come from the feature stage unrefined
  bool deterministic = false;  // single-worker scheduling, fixed keyframe stride
};

int cmd_run(const std::string& config_path, const std::string& data_dir,
            const std::string& out_dir, const RunFlags& flags) {
  rslam::Config cfg = load_or_default(config_path);
  if (flags.no_gyro) {
    cfg.pipeline.odometry.use_gyro = false;
    cfg.pipeline.graph.estimate_bias = false;
  }
  if (flags.no_bias) cfg.pipeline.graph.estimate_bias = false;
  if (flags.coarse_only) cfg.pipeline.coarse_only = true;
  if (flags.deterministic) cfg.pipeline.threaded = false;
  const rslam::SimulatedSequence seq = rslam::load_sequence(data_dir);
  const rslam::RunReport rep = rslam::run_slam(seq.scans, seq.gyro, cfg.pipeline);

  fs::create_directories(out_dir);
  rslam::save_trajectory_csv((fs::path(out_dir) / "odometry.csv").string(), rep.odometry);
  rslam::save_trajectory_csv((fs::path(out_dir) / "optimized.csv").string(), rep.optimized);
  rslam::save_g2o((fs::path(out_dir) / "graph.g2o").string(), rep.graph);
  rslam::write_trajectory_svg(
      (fs::path(out_dir) / "trajectories.svg").string(),
      {{"ground truth", seq.ground_truth}, {"odometry", rep.odometry}, {"optimized", rep.optimized}});

  json report;
  report["frames"] = rep.odometry.size();
  report["keyframes"] = rep.keyframe_frames.size();
  report["travel_distance"] = rep.travel_distance;
  report["loop_candidates"] = rep.loops.size();
  report["loops_closed"] = rep.loops_closed();
  report["loops"] = json::array();
  for (const rslam::LoopEvent& e : rep.loops) {
    report["loops"].push_back({{"query_frame", e.query_frame},
                               {"match_frame", e.match_frame},
                               {"descriptor_score", e.descriptor_score},
                               {"coarse_valid", e.coarse_valid},
                               {"coarse_inliers", e.coarse_inliers},
                               {"coarse_matches", e.coarse_matches},
                               {"coarse_scale", e.coarse_scale},
                               {"accepted", e.accepted},
                               {"fine_scaled", e.fine_scaled}});
  }
  if (!rep.biases.empty()) {
    report["bias_first"] = rep.biases.front();
    report["bias_last"] = rep.biases.back();
  }
  report["solve_count"] = rep.solve_count;
  report["timing_seconds"] = {{"odometry", rep.timing.odometry},
                              {"keyframing", rep.timing.keyframing},
                              {"retrieval", rep.timing.retrieval},
                              {"coarse", rep.timing.coarse},
                              {"fine", rep.timing.fine},
                              {"solve", rep.timing.solve}};
  if (!seq.ground_truth.empty()) {
    const double max_dt = half_scan_period(seq.ground_truth);
    report["odometry_metrics"] = trajectory_metrics(seq.ground_truth, rep.odometry, max_dt);
    report["optimized_metrics"] = trajectory_metrics(seq.ground_truth, rep.optimized, max_dt);
  }
  std::ofstream((fs::path(out_dir) / "report.json").string()) << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& reference_path, const std::string& estimate_path, double max_dt) {
  const rslam::Trajectory reference = rslam::load_trajectory_csv(reference_path);
  const rslam::Trajectory estimate = rslam::load_trajectory_csv(estimate_path);
  if (max_dt <= 0.0) max_dt = half_scan_period(reference);
  std::cout << trajectory_metrics(reference, estimate, max_dt).dump(2) << "\n";
  return 0;
}

int cmd_plot(const std::vector<std::string>& specs, const std::string& out_path) {
  std::vector<std::pair<std::string, rslam::Trajectory>> named;
  for (const std::string& spec : specs) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("trajectory spec must be name=path.csv: " + spec);
    named.emplace_back(spec.substr(0, eq), rslam::load_trajectory_csv(spec.substr(eq + 1)));
  }
  rslam::write_trajectory_svg(out_path, named);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_config(const std::string& out_path) {
  const std::string text = rslam::default_config_json();
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
    out << text;
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D spinning-radar SLAM: simulation, odometry, loop closure, optimization"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, reference_path, estimate_path, out_path;
  double max_dt = 0.0;
  long long seed = -1;
  RunFlags flags;
  std::vector<std::string> traj_specs;

  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic radar sequence");
  sim->add_option("--config", config_path, "JSON config file");
  sim->add_option("--out", out_dir, "output sequence directory")->required();
  sim->add_option("--seed", seed, "override the sequence noise seed");

  CLI::App* run = app.add_subcommand("run", "Run the SLAM pipeline on a sequence");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--data", data_dir, "sequence directory")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--no-gyro", flags.no_gyro, "ignore the gyro and drop graph bias states");
  run->add_flag("--no-bias", flags.no_bias, "keep graph biases frozen at odometry values");
  run->add_flag("--coarse-only", flags.coarse_only, "skip fine loop refinement");
  run->add_flag("--deterministic", flags.deterministic, "single-worker scheduling");

  CLI::App* eval = app.add_subcommand("eval", "Compare an estimate against a reference");
  eval->add_option("--reference", reference_path, "reference trajectory CSV")->required();
  eval->add_option("--estimate", estimate_path, "estimate trajectory CSV")->required();
  eval->add_option("--max-dt", max_dt, "association window, s (default: half the scan period)");

  CLI::App* plot = app.add_subcommand("plot", "Render trajectories to SVG");
  plot->add_option("--traj", traj_specs, "name=path.csv (repeatable)")->required();
  plot->add_option("--out", out_path, "output SVG path")->required();

  CLI::App* conf = app.add_subcommand("config", "Print the default config");
  conf->add_option("--out", out_path, "write to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, seed);
    if (run->parsed()) return cmd_run(config_path, data_dir, out_dir, flags);
    if (eval->parsed()) return cmd_eval(reference_path, estimate_path, max_dt);
    if (plot->parsed()) return cmd_plot(traj_specs, out_path);
    if (conf->parsed()) return cmd_config(out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
