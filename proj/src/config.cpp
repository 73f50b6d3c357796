#include "rslam/config.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>

namespace rslam {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("config: " + path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known) fail(path + "." + it.key(), "unknown key");
  }
}

template <typename T>
void read(const json& j, const std::string& path, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(path + "." + key, e.what());
  }
}

void read_vec3(const json& j, const std::string& path, const char* key, Eigen::Vector3d& out) {
  if (!j.contains(key)) return;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 3) fail(path + "." + key, "expected an array of 3 numbers");
  for (int k = 0; k < 3; ++k) out(k) = a.at(k).get<double>();
}

void parse_render(const json& j, const std::string& path, RenderParams& p) {
  check_keys(j, path,
             {"azimuths", "range_bins", "range_resolution", "scan_duration", "beam_sigma",
              "range_sigma", "noise_floor_mean", "noise_floor_sigma", "attenuation_knee",
              "attenuation_exponent"});
  read(j, path, "azimuths", p.azimuths);
  read(j, path, "range_bins", p.range_bins);
  read(j, path, "range_resolution", p.range_resolution);
  read(j, path, "scan_duration", p.scan_duration);
  read(j, path, "beam_sigma", p.beam_sigma);
  read(j, path, "range_sigma", p.range_sigma);
  read(j, path, "noise_floor_mean", p.noise_floor_mean);
  read(j, path, "noise_floor_sigma", p.noise_floor_sigma);
  read(j, path, "attenuation_knee", p.attenuation_knee);
  read(j, path, "attenuation_exponent", p.attenuation_exponent);
}

void parse_simulate(const json& j, const std::string& path, SimulateConfig& c) {
  check_keys(j, path,
             {"world_seed", "extent", "clusters", "per_cluster", "cluster_sigma", "scattered",
              "min_reflectivity", "render", "waypoints", "stops", "seed", "speed", "scan_period",
              "gyro_rate", "gyro_bias", "gyro_noise_sigma", "odom_noise_sigma", "ramp_time"});
  read(j, path, "world_seed", c.world_seed);
  read(j, path, "extent", c.world.extent);
  read(j, path, "clusters", c.world.clusters);
  read(j, path, "per_cluster", c.world.per_cluster);
  read(j, path, "cluster_sigma", c.world.cluster_sigma);
  read(j, path, "scattered", c.world.scattered);
  read(j, path, "min_reflectivity", c.world.min_reflectivity);
  if (j.contains("render")) parse_render(j.at("render"), path + ".render", c.sequence.render);
  if (j.contains("waypoints")) {
    c.waypoints.clear();
    for (const json& w : j.at("waypoints")) {
      if (!w.is_array() || w.size() < 2 || w.size() > 3)
        fail(path + ".waypoints", "each waypoint is [x, y] or [x, y, theta]");
      c.waypoints.emplace_back(w.at(0).get<double>(), w.at(1).get<double>(),
                               w.size() == 3 ? w.at(2).get<double>() : 0.0);
    }
  }
  if (j.contains("stops")) {
    c.sequence.stops.clear();
    for (const json& s : j.at("stops")) {
      if (!s.is_array() || s.size() != 2)
        fail(path + ".stops", "each stop is [waypoint_index, duration]");
      c.sequence.stops.push_back({s.at(0).get<int>(), s.at(1).get<double>()});
    }
  }
  read(j, path, "seed", c.sequence.seed);
  read(j, path, "speed", c.sequence.speed);
  read(j, path, "scan_period", c.sequence.scan_period);
  read(j, path, "gyro_rate", c.sequence.gyro_rate);
  read(j, path, "gyro_bias", c.sequence.gyro_bias);
  read(j, path, "gyro_noise_sigma", c.sequence.gyro_noise_sigma);
  read_vec3(j, path, "odom_noise_sigma", c.sequence.odom_noise_sigma);
  read(j, path, "ramp_time", c.sequence.ramp_time);
}

void parse_refine(const json& j, const std::string& path, RefineParams& p) {
  check_keys(j, path, {"max_iters", "initial_step", "min_step"});
  read(j, path, "max_iters", p.max_iters);
  read(j, path, "initial_step", p.initial_step);
  read(j, path, "min_step", p.min_step);
}

void parse_odometry(const json& j, const std::string& path, OdometryParams& p) {
  check_keys(j, path,
             {"map", "refine", "min_scaled_score", "use_gyro", "refine_rotation", "deskew",
              "subtract_bias", "stop_window", "stop_translation", "information",
              "diverged_information_scale"});
  if (j.contains("map")) {
    const json& m = j.at("map");
    check_keys(m, path + ".map", {"size_px", "resolution", "blend"});
    read(m, path + ".map", "size_px", p.map.size_px);
    read(m, path + ".map", "resolution", p.map.resolution);
    read(m, path + ".map", "blend", p.map.blend);
  }
  if (j.contains("refine")) parse_refine(j.at("refine"), path + ".refine", p.refine);
  read(j, path, "min_scaled_score", p.min_scaled_score);
  read(j, path, "use_gyro", p.use_gyro);
  read(j, path, "refine_rotation", p.refine_rotation);
  read(j, path, "deskew", p.deskew);
  read(j, path, "subtract_bias", p.subtract_bias);
  read(j, path, "stop_window", p.stop_window);
  read(j, path, "stop_translation", p.stop_translation);
  read_vec3(j, path, "information", p.information);
  read(j, path, "diverged_information_scale", p.diverged_information_scale);
}

void parse_place(const json& j, const std::string& path, PlaceRecognitionParams& p) {
  check_keys(j, path,
             {"n_angles", "n_offsets", "keep_bins", "min_travel_separation", "base_radius",
              "radius_growth"});
  read(j, path, "n_angles", p.descriptor.radon.n_angles);
  read(j, path, "n_offsets", p.descriptor.radon.n_offsets);
  read(j, path, "keep_bins", p.descriptor.keep_bins);
  read(j, path, "min_travel_separation", p.min_travel_separation);
  read(j, path, "base_radius", p.base_radius);
  read(j, path, "radius_growth", p.radius_growth);
}

void parse_coarse(const json& j, const std::string& path, CoarseRegParams& p) {
  check_keys(j, path, {"sift", "match_ratio", "ransac"});
  if (j.contains("sift")) {
    const json& s = j.at("sift");
    check_keys(s, path + ".sift",
               {"n_octaves", "intervals", "sigma0", "assumed_blur", "contrast_threshold",
                "edge_ratio", "orientation_bins", "orientation_peak_ratio", "descriptor_clamp"});
    read(s, path + ".sift", "n_octaves", p.sift.n_octaves);
    read(s, path + ".sift", "intervals", p.sift.intervals);
    read(s, path + ".sift", "sigma0", p.sift.sigma0);
    read(s, path + ".sift", "assumed_blur", p.sift.assumed_blur);
    read(s, path + ".sift", "contrast_threshold", p.sift.contrast_threshold);
    read(s, path + ".sift", "edge_ratio", p.sift.edge_ratio);
    read(s, path + ".sift", "orientation_bins", p.sift.orientation_bins);
    read(s, path + ".sift", "orientation_peak_ratio", p.sift.orientation_peak_ratio);
    read(s, path + ".sift", "descriptor_clamp", p.sift.descriptor_clamp);
  }
  read(j, path, "match_ratio", p.match_ratio);
  if (j.contains("ransac")) {
    const json& r = j.at("ransac");
    check_keys(r, path + ".ransac",
               {"max_iters", "inlier_tolerance_px", "min_inliers", "max_scale_deviation", "seed"});
    read(r, path + ".ransac", "max_iters", p.ransac.max_iters);
    read(r, path + ".ransac", "inlier_tolerance_px", p.ransac.inlier_tolerance_px);
    read(r, path + ".ransac", "min_inliers", p.ransac.min_inliers);
    read(r, path + ".ransac", "max_scale_deviation", p.ransac.max_scale_deviation);
    read(r, path + ".ransac", "seed", p.ransac.seed);
  }
}

void parse_fine(const json& j, const std::string& path, RegistrationParams& p) {
  check_keys(j, path, {"use_search", "search", "refine", "min_scaled_score"});
  read(j, path, "use_search", p.use_search);
  if (j.contains("search")) {
    const json& s = j.at("search");
    check_keys(s, path + ".search", {"trans_span", "trans_step", "rot_span", "rot_step"});
    read(s, path + ".search", "trans_span", p.search.trans_span);
    read(s, path + ".search", "trans_step", p.search.trans_step);
    read(s, path + ".search", "rot_span", p.search.rot_span);
    read(s, path + ".search", "rot_step", p.search.rot_step);
  }
  if (j.contains("refine")) parse_refine(j.at("refine"), path + ".refine", p.refine);
  read(j, path, "min_scaled_score", p.min_scaled_score);
}

void parse_graph(const json& j, const std::string& path, PoseGraphParams& p) {
  check_keys(j, path,
             {"estimate_bias", "bias_correction_sign", "bias_random_walk_sigma",
              "cauchy_schedule", "max_iterations", "tol_dx", "initial_lambda"});
  read(j, path, "estimate_bias", p.estimate_bias);
  read(j, path, "bias_correction_sign", p.bias_correction_sign);
  read(j, path, "bias_random_walk_sigma", p.bias_random_walk_sigma);
  read(j, path, "cauchy_schedule", p.cauchy_schedule);
  read(j, path, "max_iterations", p.max_iterations);
  read(j, path, "tol_dx", p.tol_dx);
  read(j, path, "initial_lambda", p.initial_lambda);
}

void parse_pipeline_block(const json& j, const std::string& path, PipelineParams& p) {
  check_keys(j, path,
             {"keyframe_stride", "threaded", "optimize_per_loop", "coarse_only",
              "loop_covariance_scale", "inject_odometry_noise", "inject_noise_seed"});
  read(j, path, "keyframe_stride", p.keyframe_stride);
  read(j, path, "threaded", p.threaded);
  read(j, path, "optimize_per_loop", p.optimize_per_loop);
  read(j, path, "coarse_only", p.coarse_only);
  read(j, path, "loop_covariance_scale", p.loop_covariance_scale);
  read_vec3(j, path, "inject_odometry_noise", p.inject_odometry_noise);
  read(j, path, "inject_noise_seed", p.inject_noise_seed);
}

void validate(const Config& c) {
  if (c.pipeline.loop_covariance_scale <= 0.0)
    fail("pipeline.loop_covariance_scale", "must be positive");
  const double sign = c.pipeline.graph.bias_correction_sign;
  if (sign != 1.0 && sign != -1.0) fail("pose_graph.bias_correction_sign", "must be +1 or -1");
  for (double v : c.pipeline.graph.cauchy_schedule)
    if (!(v > 0.0)) fail("pose_graph.cauchy_schedule", "entries must be positive");
  if (c.pipeline.coarse.match_ratio <= 0.0 || c.pipeline.coarse.match_ratio > 1.0)
    fail("coarse.match_ratio", "must be in (0, 1]");
  if (c.simulate.waypoints.size() < 2) fail("simulate.waypoints", "need at least two waypoints");
}

}  // namespace

Config parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: not valid JSON: ") + e.what());
  }

  Config c;
  c.simulate.waypoints = {Pose2(0, 0, 0), Pose2(100, 0, 0), Pose2(100, 100, 0), Pose2(0, 100, 0),
                          Pose2(0, 0, 0)};
  check_keys(j, "<root>",
             {"simulate", "odometry", "place_recognition", "coarse", "fine", "pose_graph",
              "pipeline"});
  if (j.contains("simulate")) parse_simulate(j.at("simulate"), "simulate", c.simulate);
  if (j.contains("odometry")) parse_odometry(j.at("odometry"), "odometry", c.pipeline.odometry);
  if (j.contains("place_recognition"))
    parse_place(j.at("place_recognition"), "place_recognition", c.pipeline.place);
  if (j.contains("coarse")) parse_coarse(j.at("coarse"), "coarse", c.pipeline.coarse);
  if (j.contains("fine")) parse_fine(j.at("fine"), "fine", c.pipeline.fine);
  if (j.contains("pose_graph")) parse_graph(j.at("pose_graph"), "pose_graph", c.pipeline.graph);
  if (j.contains("pipeline")) parse_pipeline_block(j.at("pipeline"), "pipeline", c.pipeline);
  validate(c);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_json(text);
}

std::string default_config_json() {
  const Config c = parse_config_json("{}");
  json j;
  j["simulate"] = {
      {"world_seed", c.simulate.world_seed},
      {"extent", c.simulate.world.extent},
      {"clusters", c.simulate.world.clusters},
      {"per_cluster", c.simulate.world.per_cluster},
      {"cluster_sigma", c.simulate.world.cluster_sigma},
      {"scattered", c.simulate.world.scattered},
      {"min_reflectivity", c.simulate.world.min_reflectivity},
      {"render",
       {{"azimuths", c.simulate.sequence.render.azimuths},
        {"range_bins", c.simulate.sequence.render.range_bins},
        {"range_resolution", c.simulate.sequence.render.range_resolution},
        {"scan_duration", c.simulate.sequence.render.scan_duration},
        {"beam_sigma", c.simulate.sequence.render.beam_sigma},
        {"range_sigma", c.simulate.sequence.render.range_sigma},
        {"noise_floor_mean", c.simulate.sequence.render.noise_floor_mean},
        {"noise_floor_sigma", c.simulate.sequence.render.noise_floor_sigma},
        {"attenuation_knee", c.simulate.sequence.render.attenuation_knee},
        {"attenuation_exponent", c.simulate.sequence.render.attenuation_exponent}}},
      {"waypoints", json::array()},
      {"stops", json::array()},
      {"seed", c.simulate.sequence.seed},
      {"speed", c.simulate.sequence.speed},
      {"scan_period", c.simulate.sequence.scan_period},
      {"gyro_rate", c.simulate.sequence.gyro_rate},
      {"gyro_bias", c.simulate.sequence.gyro_bias},
      {"gyro_noise_sigma", c.simulate.sequence.gyro_noise_sigma},
      {"odom_noise_sigma",
       {c.simulate.sequence.odom_noise_sigma.x(), c.simulate.sequence.odom_noise_sigma.y(),
        c.simulate.sequence.odom_noise_sigma.z()}},
      {"ramp_time", c.simulate.sequence.ramp_time},
  };
  for (const Pose2& w : c.simulate.waypoints)
    j["simulate"]["waypoints"].push_back({w.x, w.y, w.theta});
  for (const StopEvent& s : c.simulate.sequence.stops)
    j["simulate"]["stops"].push_back({s.waypoint_index, s.duration});

  const OdometryParams& o = c.pipeline.odometry;
  j["odometry"] = {
      {"map",
       {{"size_px", o.map.size_px}, {"resolution", o.map.resolution}, {"blend", o.map.blend}}},
      {"refine",
       {{"max_iters", o.refine.max_iters},
        {"initial_step", o.refine.initial_step},
        {"min_step", o.refine.min_step}}},
      {"min_scaled_score", o.min_scaled_score},
      {"use_gyro", o.use_gyro},
      {"refine_rotation", o.refine_rotation},
      {"deskew", o.deskew},
      {"subtract_bias", o.subtract_bias},
      {"stop_window", o.stop_window},
      {"stop_translation", o.stop_translation},
      {"information", {o.information.x(), o.information.y(), o.information.z()}},
      {"diverged_information_scale", o.diverged_information_scale},
  };

  const PlaceRecognitionParams& pr = c.pipeline.place;
  j["place_recognition"] = {
      {"n_angles", pr.descriptor.radon.n_angles},
      {"n_offsets", pr.descriptor.radon.n_offsets},
      {"keep_bins", pr.descriptor.keep_bins},
      {"min_travel_separation", pr.min_travel_separation},
      {"base_radius", pr.base_radius},
      {"radius_growth", pr.radius_growth},
  };

  const CoarseRegParams& cr = c.pipeline.coarse;
  j["coarse"] = {
      {"sift",
       {{"n_octaves", cr.sift.n_octaves},
        {"intervals", cr.sift.intervals},
        {"sigma0", cr.sift.sigma0},
        {"assumed_blur", cr.sift.assumed_blur},
        {"contrast_threshold", cr.sift.contrast_threshold},
        {"edge_ratio", cr.sift.edge_ratio},
        {"orientation_bins", cr.sift.orientation_bins},
        {"orientation_peak_ratio", cr.sift.orientation_peak_ratio},
        {"descriptor_clamp", cr.sift.descriptor_clamp}}},
      {"match_ratio", cr.match_ratio},
      {"ransac",
       {{"max_iters", cr.ransac.max_iters},
        {"inlier_tolerance_px", cr.ransac.inlier_tolerance_px},
        {"min_inliers", cr.ransac.min_inliers},
        {"max_scale_deviation", cr.ransac.max_scale_deviation},
        {"seed", cr.ransac.seed}}},
  };

  const RegistrationParams& f = c.pipeline.fine;
  j["fine"] = {
      {"use_search", f.use_search},
      {"search",
       {{"trans_span", f.search.trans_span},
        {"trans_step", f.search.trans_step},
        {"rot_span", f.search.rot_span},
        {"rot_step", f.search.rot_step}}},
      {"refine",
       {{"max_iters", f.refine.max_iters},
        {"initial_step", f.refine.initial_step},
        {"min_step", f.refine.min_step}}},
      {"min_scaled_score", f.min_scaled_score},
  };

  const PoseGraphParams& g = c.pipeline.graph;
  j["pose_graph"] = {
      {"estimate_bias", g.estimate_bias},
      {"bias_correction_sign", g.bias_correction_sign},
      {"bias_random_walk_sigma", g.bias_random_walk_sigma},
      {"cauchy_schedule", g.cauchy_schedule},
      {"max_iterations", g.max_iterations},
      {"tol_dx", g.tol_dx},
      {"initial_lambda", g.initial_lambda},
  };

  j["pipeline"] = {
      {"keyframe_stride", c.pipeline.keyframe_stride},
      {"threaded", c.pipeline.threaded},
      {"optimize_per_loop", c.pipeline.optimize_per_loop},
      {"coarse_only", c.pipeline.coarse_only},
      {"loop_covariance_scale", c.pipeline.loop_covariance_scale},
      {"inject_odometry_noise",
       {c.pipeline.inject_odometry_noise.x(), c.pipeline.inject_odometry_noise.y(),
        c.pipeline.inject_odometry_noise.z()}},
      {"inject_noise_seed", c.pipeline.inject_noise_seed},
  };
  return j.dump(2) + "\n";
}

}  // namespace rslam
