#include "rslam/scan_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "scan files store raw little-endian float32");

namespace rslam {

namespace fs = std::filesystem;

void save_scan(const std::string& path, const PolarScan& scan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "RSLAM_SCAN 1\n";
  out << std::setprecision(17) << scan.azimuths << ' ' << scan.range_bins << ' '
      << scan.range_resolution << ' ' << scan.stamp << '\n';
  for (int k = 0; k < scan.azimuths; ++k) {
    if (k) out << ' ';
    out << scan.azimuth_timestamps[k];
  }
  out << '\n';
  out.write(reinterpret_cast<const char*>(scan.intensities.data.data()),
            static_cast<std::streamsize>(scan.intensities.data.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

PolarScan load_scan(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "RSLAM_SCAN" || version != 1)
    throw std::runtime_error("not a scan file: " + path);

  PolarScan scan;
  in >> scan.azimuths >> scan.range_bins >> scan.range_resolution >> scan.stamp;
  if (!in || scan.azimuths <= 0 || scan.range_bins <= 0 || scan.range_resolution <= 0.0)
    throw std::runtime_error("malformed scan header: " + path);
  scan.azimuth_timestamps.resize(scan.azimuths);
  for (double& t : scan.azimuth_timestamps) in >> t;
  if (!in) throw std::runtime_error("malformed scan timestamps: " + path);
  in.ignore(1);  // newline before the binary block

  scan.intensities = Grid(scan.range_bins, scan.azimuths);
  in.read(reinterpret_cast<char*>(scan.intensities.data.data()),
          static_cast<std::streamsize>(scan.intensities.data.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(scan.intensities.data.size() * sizeof(float)))
    throw std::runtime_error("truncated scan data: " + path);
  return scan;
}

void save_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "stamp,x,y,theta\n" << std::setprecision(17);
  for (const TrajectorySample& s : traj)
    out << s.stamp << ',' << s.pose.x << ',' << s.pose.y << ',' << s.pose.theta << '\n';
}

Trajectory load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Trajectory traj;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double stamp, x, y, theta;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &stamp, &x, &y, &theta) != 4)
      throw std::runtime_error("malformed trajectory row in " + path + ": " + line);
    traj.push_back({stamp, Pose2(x, y, theta)});
  }
  return traj;
}

void save_gyro_csv(const std::string& path, const std::vector<GyroSample>& gyro) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "stamp,omega\n" << std::setprecision(17);
  for (const GyroSample& s : gyro) out << s.stamp << ',' << s.omega << '\n';
}

std::vector<GyroSample> load_gyro_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<GyroSample> gyro;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double stamp, omega;
    if (std::sscanf(line.c_str(), "%lf,%lf", &stamp, &omega) != 2)
      throw std::runtime_error("malformed gyro row in " + path + ": " + line);
    gyro.push_back({stamp, omega});
  }
  return gyro;
}

namespace {

std::string scan_path(const std::string& dir, int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "scan_%06d.bin", index);
  return (fs::path(dir) / name).string();
}

}  // namespace

void save_sequence(const std::string& dir, const SimulatedSequence& seq) {
  fs::create_directories(dir);
  for (size_t m = 0; m < seq.scans.size(); ++m)
    save_scan(scan_path(dir, static_cast<int>(m)), seq.scans[m]);
  save_trajectory_csv((fs::path(dir) / "ground_truth.csv").string(), seq.ground_truth);
  save_gyro_csv((fs::path(dir) / "gyro.csv").string(), seq.gyro);

  std::ofstream odo((fs::path(dir) / "seed_odometry.csv").string());
  odo << "x,y,theta\n" << std::setprecision(17);
  for (const Pose2& p : seq.seed_odometry) odo << p.x << ',' << p.y << ',' << p.theta << '\n';

  nlohmann::json meta;
  meta["num_scans"] = seq.scans.size();
  meta["true_gyro_bias"] = seq.true_gyro_bias;
  meta["path_length"] = seq.path_length;
  std::ofstream((fs::path(dir) / "meta.json").string()) << meta.dump(2) << '\n';
}

SimulatedSequence load_sequence(const std::string& dir) {
  std::ifstream meta_in((fs::path(dir) / "meta.json").string());
  if (!meta_in) throw std::runtime_error("cannot open " + dir + "/meta.json");
  nlohmann::json meta = nlohmann::json::parse(meta_in);

  SimulatedSequence seq;
  seq.true_gyro_bias = meta.at("true_gyro_bias").get<double>();
  seq.path_length = meta.at("path_length").get<double>();
  const int n = meta.at("num_scans").get<int>();
  seq.scans.reserve(n);
  for (int m = 0; m < n; ++m) seq.scans.push_back(load_scan(scan_path(dir, m)));
  seq.ground_truth = load_trajectory_csv((fs::path(dir) / "ground_truth.csv").string());
  seq.gyro = load_gyro_csv((fs::path(dir) / "gyro.csv").string());

  std::ifstream odo((fs::path(dir) / "seed_odometry.csv").string());
  if (odo) {
    std::string line;
    std::getline(odo, line);
    while (std::getline(odo, line)) {
      if (line.empty()) continue;
      double x, y, theta;
      if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &theta) != 3)
        throw std::runtime_error("malformed seed odometry row: " + line);
      seq.seed_odometry.emplace_back(x, y, theta);
    }
  }
  return seq;
}

}  // namespace rslam
