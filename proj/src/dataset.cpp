#include "dvse/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dvse {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void atomic_write(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void append_fixed(std::string& s, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  s += buf;
}

std::vector<std::vector<double>> read_csv(const fs::path& path, size_t ncols) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(ncols);
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{}) throw IoError("bad number in " + path.string());
      row.push_back(v);
      p = next;
      if (p < end && *p == ',') ++p;
    }
    if (row.size() != ncols) throw IoError("bad column count in " + path.string());
    rows.push_back(std::move(row));
  }
  return rows;
}

json pose_to_json(const EulerAngles& e) {
  return json{{"alpha", e.alpha}, {"beta", e.beta}, {"gamma", e.gamma}};
}

EulerAngles pose_from_json(const json& j) {
  return EulerAngles{j.at("alpha").get<double>(), j.at("beta").get<double>(),
                     j.at("gamma").get<double>()};
}

json noise_to_json(const NoiseConfig& n) {
  return json{{"accel_bias", {n.accel_bias.x(), n.accel_bias.y(), n.accel_bias.z()}},
              {"gyro_bias", {n.gyro_bias.x(), n.gyro_bias.y(), n.gyro_bias.z()}},
              {"accel_white_sigma", n.accel_white_sigma},
              {"gyro_white_sigma", n.gyro_white_sigma},
              {"bias_walk_sigma", n.bias_walk_sigma},
              {"vibration_amp", n.vibration_amp},
              {"vibration_hz", n.vibration_hz}};
}

NoiseConfig noise_from_json(const json& j) {
  NoiseConfig n;
  const auto ab = j.at("accel_bias").get<std::vector<double>>();
  const auto gb = j.at("gyro_bias").get<std::vector<double>>();
  n.accel_bias = Vec3(ab.at(0), ab.at(1), ab.at(2));
  n.gyro_bias = Vec3(gb.at(0), gb.at(1), gb.at(2));
  n.accel_white_sigma = j.at("accel_white_sigma").get<double>();
  n.gyro_white_sigma = j.at("gyro_white_sigma").get<double>();
  n.bias_walk_sigma = j.at("bias_walk_sigma").get<double>();
  n.vibration_amp = j.at("vibration_amp").get<double>();
  n.vibration_hz = j.at("vibration_hz").get<double>();
  return n;
}

}  // namespace

void save_trajectory(const Trajectory& traj, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());

  std::string imu = "t,ax,ay,az,gx,gy,gz\n";
  imu.reserve(traj.imu.t.size() * 64);
  for (size_t i = 0; i < traj.imu.t.size(); ++i) {
    append_fixed(imu, traj.imu.t[i]);
    for (int a = 0; a < 3; ++a) {
      imu += ',';
      append_fixed(imu, traj.imu.accel[i][a]);
    }
    for (int a = 0; a < 3; ++a) {
      imu += ',';
      append_fixed(imu, traj.imu.gyro[i][a]);
    }
    imu += '\n';
  }
  atomic_write(dir / "imu.csv", imu);

  std::string gnss = "t,speed\n";
  for (size_t i = 0; i < traj.gnss.t.size(); ++i) {
    append_fixed(gnss, traj.gnss.t[i]);
    gnss += ',';
    append_fixed(gnss, traj.gnss.speed[i]);
    gnss += '\n';
  }
  atomic_write(dir / "gnss.csv", gnss);

  std::string truth = "t,speed,alpha,beta,gamma\n";
  for (size_t i = 0; i < traj.truth_speed.size(); ++i) {
    append_fixed(truth, static_cast<double>(i));
    truth += ',';
    append_fixed(truth, traj.truth_speed[i]);
    const EulerAngles& e = traj.truth_pose[i];
    for (double v : {e.alpha, e.beta, e.gamma}) {
      truth += ',';
      append_fixed(truth, v);
    }
    truth += '\n';
  }
  atomic_write(dir / "truth.csv", truth);
}

Trajectory load_trajectory(const fs::path& dir) {
  Trajectory traj;
  traj.dir = dir.string();
  for (const auto& row : read_csv(dir / "imu.csv", 7)) {
    traj.imu.t.push_back(row[0]);
    traj.imu.accel.emplace_back(row[1], row[2], row[3]);
    traj.imu.gyro.emplace_back(row[4], row[5], row[6]);
  }
  for (const auto& row : read_csv(dir / "gnss.csv", 2)) {
    traj.gnss.t.push_back(static_cast<int>(row[0] + 0.5));
    traj.gnss.speed.push_back(row[1]);
  }
  for (const auto& row : read_csv(dir / "truth.csv", 5)) {
    traj.truth_speed.push_back(row[1]);
    traj.truth_pose.push_back(EulerAngles{row[2], row[3], row[4]});
  }
  return traj;
}

void save_manifest(const DatasetManifest& m, const fs::path& root) {
  json j;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["duration_s"] = m.duration_s;
  j["trajectories"] = json::array();
  for (const auto& e : m.entries) {
    j["trajectories"].push_back(json{{"dir", e.dir},
                                     {"seed", e.seed},
                                     {"delay", e.delay},
                                     {"pose", pose_to_json(e.pose)},
                                     {"noise", noise_to_json(e.noise)}});
  }
  atomic_write(root / "manifest.json", j.dump(2) + "\n");
}

DatasetManifest load_manifest(const fs::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("cannot read manifest at " + root.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest: " + std::string(e.what()));
  }
  DatasetManifest m;
  m.version = j.at("version").get<std::string>();
  if (m.version != "dvse-ds/1") {
    throw std::invalid_argument("unsupported dataset version " + m.version);
  }
  m.seed = j.at("seed").get<std::uint64_t>();
  m.duration_s = j.at("duration_s").get<int>();
  for (const auto& e : j.at("trajectories")) {
    m.entries.push_back(DatasetManifest::Entry{
        e.at("dir").get<std::string>(), e.at("seed").get<std::uint64_t>(),
        e.at("delay").get<int>(), pose_from_json(e.at("pose")),
        noise_from_json(e.at("noise"))});
  }
  return m;
}

std::vector<Trajectory> load_dataset(const fs::path& root) {
  DatasetManifest m = load_manifest(root);
  std::vector<Trajectory> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) {
    Trajectory t = load_trajectory(root / e.dir);
    t.seed = e.seed;
    t.gnss.delay = e.delay;
    t.noise = e.noise;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace dvse
