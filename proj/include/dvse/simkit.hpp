#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "dvse/dataset.hpp"
#include "dvse/geom.hpp"

namespace dvse {

/// Ground-truth vehicle motion sampled at 50 Hz. Arrays hold duration/dt + 1
/// samples so every whole second has an inclusive endpoint.
struct SpeedProfile {
  double dt = kSpeedDt;
  std::vector<double> fwd_speed;  // m/s, >= 0
  std::vector<double> yaw_rate;   // rad/s
  double duration_s = 0.0;

  static constexpr double kSpeedDt = 0.02;
};

enum class Maneuver { kIdle, kAccelerate, kCruise, kBrake, kTurn };

struct ManeuverSegment {
  Maneuver kind = Maneuver::kIdle;
  double duration_s = 0.0;
  double accel = 0.0;     // m/s^2, used by accelerate/brake
  double yaw_rate = 0.0;  // rad/s, used by turn
};

struct ManeuverConfig {
  double max_speed = 25.0;
  double max_accel = 2.5;   // m/s^2, must stay <= 6
  double max_brake = 4.0;   // m/s^2, must stay <= 6
  double min_segment_s = 4.0;
  double max_segment_s = 12.0;
  double max_yaw_rate = 0.4;  // rad/s
  /// When non-empty the segments are played back verbatim (cycled) instead
  /// of being drawn at random.
  std::vector<ManeuverSegment> forced;
};

/// Piecewise maneuver profile; deterministic per seed. Duration must be
/// at least 20 s.
SpeedProfile gen_speed_profile(std::uint64_t seed, double duration_s,
                               const ManeuverConfig& cfg = {});

/// Inverts the accelerometer measurement model: phone accel =
/// R^T (alpha_v + g) + bias walk + white noise + vibration, with
/// alpha_v = [v*yaw_rate, dv/dt, 0] on a flat road.
ImuStream synth_imu(const SpeedProfile& profile, const EulerAngles& pose,
                    const NoiseConfig& noise, std::uint64_t seed);

/// Per-second displacement speed with Gaussian noise, clamped at zero.
/// With delay 1 the tick at t reports the value computed for t-1.
GnssStream synth_gnss(const SpeedProfile& profile, int delay_s, double sigma,
                      std::uint64_t seed);

struct PosePolicy {
  bool random = false;        // false: fixed pose below
  EulerAngles fixed;          // used when !random
  AngleRanges ranges;         // used when random
  bool mid_change = false;    // one seeded step change of pose per trajectory
};

struct DatasetSpec {
  int n_traj = 1;
  double duration_s = 120.0;
  std::uint64_t seed = 1;
  PosePolicy pose;
  NoiseConfig noise;
  double accel_bias_max = 0.0;  // >0: per-trajectory uniform bias draw, m/s^2
  double gyro_bias_max = 0.0;   // >0: per-trajectory uniform bias draw, rad/s
  double delay_fraction = 0.0;  // first floor(f*n) trajectories get delay 1
  double gnss_sigma = 0.0;      // m/s
  ManeuverConfig maneuvers;
};

/// Phone-in-vehicle pose over time: fixed, or one step change at a whole
/// second.
struct PoseSchedule {
  EulerAngles initial;
  std::optional<int> change_second;
  EulerAngles changed;
};

/// Generates, writes, and indexes a dataset under `out`. Regeneration with
/// identical arguments is byte-identical.
DatasetManifest make_dataset(const DatasetSpec& spec,
                             const std::filesystem::path& out);

/// Builds one trajectory in memory (the unit make_dataset writes out).
Trajectory synth_trajectory(const SpeedProfile& profile,
                            const EulerAngles& pose, const NoiseConfig& noise,
                            int delay_s, double gnss_sigma,
                            std::uint64_t seed);

Trajectory synth_trajectory(const SpeedProfile& profile,
                            const PoseSchedule& schedule,
                            const NoiseConfig& noise, int delay_s,
                            double gnss_sigma, std::uint64_t seed);

}  // namespace dvse
