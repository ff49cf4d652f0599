#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dvse/geom.hpp"

namespace dvse {

/// I/O failures distinct from validation errors (CLI maps them to exit 2).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 50 Hz phone-frame accelerometer + gyroscope samples.
struct ImuStream {
  std::vector<double> t;
  std::vector<Vec3> accel;  // m/s^2
  std::vector<Vec3> gyro;   // rad/s
};

/// 1 Hz forward-speed ticks; tick k is the value reported at t = k seconds.
struct GnssStream {
  std::vector<int> t;
  std::vector<double> speed;  // m/s, >= 0
  int delay = 0;              // 0 or 1 s
  double sigma = 0.0;         // m/s
};

/// Additive sensor error model used by the simulator.
struct NoiseConfig {
  Vec3 accel_bias = Vec3::Zero();   // m/s^2
  Vec3 gyro_bias = Vec3::Zero();    // rad/s
  double accel_white_sigma = 0.0;   // m/s^2
  double gyro_white_sigma = 0.0;    // rad/s
  double bias_walk_sigma = 0.0;     // m/s^2 per sqrt(s), accel bias walk
  double vibration_amp = 0.0;       // m/s^2
  double vibration_hz = 0.0;        // Hz
};

/// One simulated drive: sensors, supervision, and ground truth.
struct Trajectory {
  ImuStream imu;
  GnssStream gnss;
  std::vector<double> truth_speed;      // point samples at t = 0..D seconds
  std::vector<EulerAngles> truth_pose;  // phone-in-vehicle pose at t = 0..D
  std::uint64_t seed = 0;
  NoiseConfig noise;
  std::string dir;  // on-disk location when loaded from a dataset

  int duration_s() const { return static_cast<int>(truth_speed.size()) - 1; }
};

struct DatasetManifest {
  struct Entry {
    std::string dir;
    std::uint64_t seed = 0;
    int delay = 0;
    EulerAngles pose;
    NoiseConfig noise;
  };
  std::string version = "dvse-ds/1";
  std::uint64_t seed = 0;
  int duration_s = 0;
  std::vector<Entry> entries;
};

/// Writes one trajectory directory (imu.csv, gnss.csv, truth.csv).
/// Files are written to a temp name and renamed into place.
void save_trajectory(const Trajectory& traj, const std::filesystem::path& dir);

Trajectory load_trajectory(const std::filesystem::path& dir);

void save_manifest(const DatasetManifest& m, const std::filesystem::path& root);
DatasetManifest load_manifest(const std::filesystem::path& root);

/// Loads every trajectory listed in the manifest at `root`.
std::vector<Trajectory> load_dataset(const std::filesystem::path& root);

}  // namespace dvse
