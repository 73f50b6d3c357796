#include "rslam/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>

using namespace rslam;
using doctest::Contains;
namespace fs = std::filesystem;

TEST_SUITE("config") {

TEST_CASE("serialized defaults parse back to the same settings") {
  const Config base = parse_config_json("{}");
  const Config back = parse_config_json(default_config_json());

  CHECK(back.simulate.world_seed == base.simulate.world_seed);
  CHECK(back.simulate.world.extent == base.simulate.world.extent);
  CHECK(back.simulate.sequence.render.azimuths == base.simulate.sequence.render.azimuths);
  CHECK(back.simulate.sequence.render.beam_sigma == base.simulate.sequence.render.beam_sigma);
  CHECK(back.simulate.sequence.speed == base.simulate.sequence.speed);
  CHECK(back.simulate.sequence.scan_period == base.simulate.sequence.scan_period);
  REQUIRE(back.simulate.waypoints.size() == base.simulate.waypoints.size());
  for (size_t k = 0; k < base.simulate.waypoints.size(); ++k) {
    CHECK(back.simulate.waypoints[k].x == base.simulate.waypoints[k].x);
    CHECK(back.simulate.waypoints[k].y == base.simulate.waypoints[k].y);
  }

  CHECK(back.pipeline.odometry.map.size_px == base.pipeline.odometry.map.size_px);
  CHECK(back.pipeline.odometry.map.resolution == base.pipeline.odometry.map.resolution);
  CHECK(back.pipeline.odometry.min_scaled_score == base.pipeline.odometry.min_scaled_score);
  CHECK((back.pipeline.odometry.information - base.pipeline.odometry.information).norm() == 0.0);
  CHECK(back.pipeline.place.descriptor.keep_bins == base.pipeline.place.descriptor.keep_bins);
  CHECK(back.pipeline.coarse.match_ratio == base.pipeline.coarse.match_ratio);
  CHECK(back.pipeline.coarse.ransac.seed == base.pipeline.coarse.ransac.seed);
  CHECK(back.pipeline.fine.refine.max_iters == base.pipeline.fine.refine.max_iters);
  CHECK(back.pipeline.graph.cauchy_schedule == base.pipeline.graph.cauchy_schedule);
  CHECK(back.pipeline.keyframe_stride == base.pipeline.keyframe_stride);
  CHECK(back.pipeline.loop_covariance_scale == base.pipeline.loop_covariance_scale);

  // known-good baseline values
  CHECK(base.simulate.waypoints.size() == 5);
  CHECK(base.pipeline.odometry.map.size_px == 321);
  CHECK(base.pipeline.keyframe_stride == 4);
  CHECK(base.pipeline.loop_covariance_scale == 0.5);
}

TEST_CASE("unknown keys are reported with their full path") {
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"odometry": {"blub": 1}})"),
                       "config: odometry.blub: unknown key", std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"simulate": {"render": {"bogus": 2}}})"),
                       "config: simulate.render.bogus: unknown key", std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"nonsense": {}})"),
                       "config: <root>.nonsense: unknown key", std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"coarse": {"ransac": {"iters": 10}}})"),
                       "config: coarse.ransac.iters: unknown key", std::runtime_error);
}

TEST_CASE("values override the defaults") {
  const Config c = parse_config_json(R"({
    "simulate": {
      "waypoints": [[0, 0], [50, 0, 1.5]],
      "stops": [[1, 2.5]],
      "speed": 5.0,
      "render": {"azimuths": 200, "noise_floor_sigma": 0.0}
    },
    "odometry": {
      "map": {"size_px": 161, "resolution": 0.25},
      "min_scaled_score": 0.4,
      "use_gyro": false,
      "information": [10, 20, 30]
    },
    "place_recognition": {"keep_bins": 32},
    "coarse": {"match_ratio": 0.7, "ransac": {"seed": 99}},
    "fine": {"use_search": true, "search": {"trans_span": 2.0}},
    "pose_graph": {"estimate_bias": true, "cauchy_schedule": [5.0, 2.0, 1.0]},
    "pipeline": {
      "keyframe_stride": 2,
      "threaded": true,
      "loop_covariance_scale": 0.25,
      "inject_odometry_noise": [0.01, 0.02, 0.001]
    }
  })");

  REQUIRE(c.simulate.waypoints.size() == 2);
  CHECK(c.simulate.waypoints[0].x == 0.0);
  CHECK(c.simulate.waypoints[0].theta == 0.0);  // [x, y] form defaults theta
  CHECK(c.simulate.waypoints[1].x == 50.0);
  CHECK(c.simulate.waypoints[1].theta == 1.5);
  REQUIRE(c.simulate.sequence.stops.size() == 1);
  CHECK(c.simulate.sequence.stops[0].waypoint_index == 1);
  CHECK(c.simulate.sequence.stops[0].duration == 2.5);
  CHECK(c.simulate.sequence.speed == 5.0);
  CHECK(c.simulate.sequence.render.azimuths == 200);
  CHECK(c.simulate.sequence.render.noise_floor_sigma == 0.0);

  CHECK(c.pipeline.odometry.map.size_px == 161);
  CHECK(c.pipeline.odometry.map.resolution == 0.25);
  CHECK(c.pipeline.odometry.min_scaled_score == 0.4);
  CHECK_FALSE(c.pipeline.odometry.use_gyro);
  CHECK((c.pipeline.odometry.information - Eigen::Vector3d(10, 20, 30)).norm() == 0.0);

  CHECK(c.pipeline.place.descriptor.keep_bins == 32);
  CHECK(c.pipeline.coarse.match_ratio == 0.7);
  CHECK(c.pipeline.coarse.ransac.seed == 99);
  CHECK(c.pipeline.fine.use_search);
  CHECK(c.pipeline.fine.search.trans_span == 2.0);
  CHECK(c.pipeline.graph.estimate_bias);
  CHECK(c.pipeline.graph.cauchy_schedule == std::vector<double>{5.0, 2.0, 1.0});
  CHECK(c.pipeline.keyframe_stride == 2);
  CHECK(c.pipeline.threaded);
  CHECK(c.pipeline.loop_covariance_scale == 0.25);
  CHECK((c.pipeline.inject_odometry_noise - Eigen::Vector3d(0.01, 0.02, 0.001)).norm() == 0.0);
}

TEST_CASE("malformed documents and wrong types are rejected") {
  CHECK_THROWS_WITH_AS(parse_config_json("not json"), Contains("not valid JSON"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"odometry": {"min_scaled_score": "high"}})"),
                       Contains("config: odometry.min_scaled_score"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"odometry": {"information": [1, 2]}})"),
                       Contains("expected an array of 3 numbers"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"simulate": {"waypoints": [[1]]}})"),
                       Contains("each waypoint is [x, y] or [x, y, theta]"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"simulate": {"stops": [[1]]}})"),
                       Contains("each stop is [waypoint_index, duration]"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"odometry": 5})"), Contains("expected an object"),
                       std::runtime_error);
}

TEST_CASE("semantic validation rejects out-of-range settings") {
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"pipeline": {"loop_covariance_scale": 0.0}})"),
                       Contains("loop_covariance_scale"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"pose_graph": {"bias_correction_sign": 0.5}})"),
                       Contains("must be +1 or -1"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"pose_graph": {"cauchy_schedule": [10, -1]}})"),
                       Contains("entries must be positive"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"coarse": {"match_ratio": 0.0}})"),
                       Contains("must be in (0, 1]"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"coarse": {"match_ratio": 1.5}})"),
                       Contains("must be in (0, 1]"), std::runtime_error);
  CHECK_NOTHROW(parse_config_json(R"({"coarse": {"match_ratio": 1.0}})"));
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"simulate": {"waypoints": [[0, 0]]}})"),
                       Contains("need at least two waypoints"), std::runtime_error);
  CHECK_NOTHROW(parse_config_json(R"({"pose_graph": {"bias_correction_sign": 1.0}})"));
}

TEST_CASE("configs load from disk") {
  const fs::path dir = fs::temp_directory_path() / "rslam_config";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "config.json").string();
  {
    std::ofstream out(path);
    out << default_config_json();
  }
  const Config c = load_config(path);
  CHECK(c.pipeline.keyframe_stride == parse_config_json("{}").pipeline.keyframe_stride);
  fs::remove_all(dir);

  CHECK_THROWS_WITH_AS(load_config((dir / "missing.json").string()),
                       Contains("cannot open config"), std::runtime_error);
}

}  // TEST_SUITE
