#include "dvse/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>

namespace dvse {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

}  // namespace

SpeedProfile gen_speed_profile(std::uint64_t seed, double duration_s,
                               const ManeuverConfig& cfg) {
  if (duration_s < 20.0) {
    throw std::invalid_argument("gen_speed_profile: duration must be >= 20 s");
  }
  if (cfg.max_accel > 6.0 || cfg.max_brake > 6.0) {
    throw std::invalid_argument("gen_speed_profile: accel bound exceeds 6 m/s^2");
  }
  const double dt = SpeedProfile::kSpeedDt;
  const int n = static_cast<int>(std::llround(duration_s / dt));
  SpeedProfile p;
  p.duration_s = duration_s;
  p.fwd_speed.assign(n + 1, 0.0);
  p.yaw_rate.assign(n + 1, 0.0);

  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> useg(cfg.min_segment_s,
                                              cfg.max_segment_s);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  size_t forced_idx = 0;
  int i = 0;
  while (i < n) {
    ManeuverSegment seg;
    if (!cfg.forced.empty()) {
      seg = cfg.forced[forced_idx % cfg.forced.size()];
      ++forced_idx;
    } else {
      seg.duration_s = useg(rng);
      const double v = p.fwd_speed[i];
      if (v < 0.1) {
        seg.kind = u01(rng) < 0.2 ? Maneuver::kIdle : Maneuver::kAccelerate;
      } else {
        const double r = u01(rng);
        seg.kind = r < 0.3   ? Maneuver::kAccelerate
                   : r < 0.5 ? Maneuver::kCruise
                   : r < 0.8 ? Maneuver::kBrake
                             : Maneuver::kTurn;
      }
      switch (seg.kind) {
        case Maneuver::kAccelerate:
          seg.accel = 0.3 + u01(rng) * (cfg.max_accel - 0.3);
          break;
        case Maneuver::kBrake:
          seg.accel = 0.5 + u01(rng) * (cfg.max_brake - 0.5);
          break;
        case Maneuver::kTurn:
          seg.yaw_rate = (u01(rng) < 0.5 ? -1.0 : 1.0) *
                         (0.1 + u01(rng) * (cfg.max_yaw_rate - 0.1));
          break;
        default:
          break;
      }
    }
    int m = std::max(1, static_cast<int>(std::llround(seg.duration_s / dt)));
    m = std::min(m, n - i);
    for (int j = 0; j < m; ++j, ++i) {
      double v = p.fwd_speed[i];
      double yaw = 0.0;
      double a = 0.0;
      switch (seg.kind) {
        case Maneuver::kIdle:
          // reach standstill first if entered while moving
          a = v > 0.0 ? -cfg.max_brake : 0.0;
          break;
        case Maneuver::kAccelerate:
          a = seg.accel;
          break;
        case Maneuver::kBrake:
          a = -seg.accel;
          break;
        case Maneuver::kCruise:
          break;
        case Maneuver::kTurn:
          yaw = v > 0.0 ? seg.yaw_rate : 0.0;
          break;
      }
      p.yaw_rate[i] = yaw;
      double next = v + a * dt;
      next = std::clamp(next, 0.0, cfg.max_speed);
      p.fwd_speed[i + 1] = next;
    }
  }
  p.yaw_rate[n] = p.yaw_rate[n - 1];
  return p;
}

namespace {

ImuStream synth_imu_impl(const SpeedProfile& profile,
                         const std::function<const Mat3&(int)>& rt_of_sample,
                         const NoiseConfig& noise, std::uint64_t seed) {
  if (noise.accel_white_sigma < 0 || noise.gyro_white_sigma < 0 ||
      noise.bias_walk_sigma < 0) {
    throw std::invalid_argument("synth_imu: negative noise sigma");
  }
  const double dt = profile.dt;
  const int n = static_cast<int>(profile.fwd_speed.size()) - 1;
  const Vec3 g = gravity_ref();

  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
  Vec3 vib_phase(uphase(rng), uphase(rng), uphase(rng));

  ImuStream s;
  s.t.resize(n);
  s.accel.resize(n);
  s.gyro.resize(n);
  Vec3 accel_bias = noise.accel_bias;
  const double walk_step = noise.bias_walk_sigma * std::sqrt(dt);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    const double v = profile.fwd_speed[i];
    const double a_fwd = (profile.fwd_speed[i + 1] - v) / dt;
    const double yaw = profile.yaw_rate[i];
    const Vec3 alpha_v(v * yaw, a_fwd, 0.0);

    const Mat3& rt = rt_of_sample(i);
    Vec3 accel = rt * (alpha_v + g) + accel_bias;
    Vec3 gyro = rt * Vec3(0.0, 0.0, yaw) + noise.gyro_bias;
    if (noise.accel_white_sigma > 0) {
      accel += noise.accel_white_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    if (noise.gyro_white_sigma > 0) {
      gyro += noise.gyro_white_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    if (noise.vibration_amp > 0) {
      for (int a = 0; a < 3; ++a) {
        accel[a] += noise.vibration_amp *
                    std::sin(2.0 * M_PI * noise.vibration_hz * t + vib_phase[a]);
      }
    }
    if (walk_step > 0) {
      accel_bias += walk_step * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    s.t[i] = t;
    s.accel[i] = accel;
    s.gyro[i] = gyro;
  }
  return s;
}

}  // namespace

ImuStream synth_imu(const SpeedProfile& profile, const EulerAngles& pose,
                    const NoiseConfig& noise, std::uint64_t seed) {
  const Mat3 rt = euler_to_matrix(pose).transpose();  // vehicle -> phone
  return synth_imu_impl(
      profile, [&rt](int) -> const Mat3& { return rt; }, noise, seed);
}

GnssStream synth_gnss(const SpeedProfile& profile, int delay_s, double sigma,
                      std::uint64_t seed) {
  if (sigma < 0) throw std::invalid_argument("synth_gnss: negative sigma");
  if (delay_s != 0 && delay_s != 1) {
    throw std::invalid_argument("synth_gnss: delay must be 0 or 1 s");
  }
  const int samples_per_s = static_cast<int>(std::llround(1.0 / profile.dt));
  const int dur = static_cast<int>(
      (profile.fwd_speed.size() - 1) / static_cast<size_t>(samples_per_s));
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> clean(dur + 1, 0.0);  // clean[k]: speed over (k-1, k]
  for (int k = 1; k <= dur; ++k) {
    double disp = 0.0;
    const int base = (k - 1) * samples_per_s;
    for (int i = 0; i < samples_per_s; ++i) {
      disp += 0.5 * (profile.fwd_speed[base + i] + profile.fwd_speed[base + i + 1]) *
              profile.dt;
    }
    double v = disp;  // divided by 1 s
    if (sigma > 0) v += sigma * gauss(rng);
    clean[k] = std::max(0.0, v);
  }

  GnssStream out;
  out.delay = delay_s;
  out.sigma = sigma;
  out.t.resize(dur);
  out.speed.resize(dur);
  for (int k = 1; k <= dur; ++k) {
    out.t[k - 1] = k;
    const int src = k - delay_s;
    out.speed[k - 1] = src >= 1 ? clean[src] : 0.0;
  }
  return out;
}

Trajectory synth_trajectory(const SpeedProfile& profile,
                            const PoseSchedule& schedule,
                            const NoiseConfig& noise, int delay_s,
                            double gnss_sigma, std::uint64_t seed) {
  const int samples_per_s = static_cast<int>(std::llround(1.0 / profile.dt));
  const int dur = static_cast<int>(
      (profile.fwd_speed.size() - 1) / static_cast<size_t>(samples_per_s));
  int change_sample = -1;
  if (schedule.change_second) {
    if (*schedule.change_second < 1 || *schedule.change_second >= dur) {
      throw std::invalid_argument(
          "synth_trajectory: pose change second out of range");
    }
    change_sample = *schedule.change_second * samples_per_s;
  }
  const Mat3 rt0 = euler_to_matrix(schedule.initial).transpose();
  const Mat3 rt1 = change_sample >= 0
                       ? Mat3(euler_to_matrix(schedule.changed).transpose())
                       : rt0;

  Trajectory traj;
  traj.seed = seed;
  traj.noise = noise;
  traj.imu = synth_imu_impl(
      profile,
      [&](int i) -> const Mat3& {
        return (change_sample >= 0 && i >= change_sample) ? rt1 : rt0;
      },
      noise, derive_seed(seed, 1));
  traj.gnss = synth_gnss(profile, delay_s, gnss_sigma, derive_seed(seed, 2));
  traj.truth_speed.resize(dur + 1);
  traj.truth_pose.resize(dur + 1);
  for (int k = 0; k <= dur; ++k) {
    traj.truth_speed[k] = profile.fwd_speed[k * samples_per_s];
    traj.truth_pose[k] = (change_sample >= 0 && k >= *schedule.change_second)
                             ? schedule.changed
                             : schedule.initial;
  }
  return traj;
}

Trajectory synth_trajectory(const SpeedProfile& profile,
                            const EulerAngles& pose, const NoiseConfig& noise,
                            int delay_s, double gnss_sigma,
                            std::uint64_t seed) {
  return synth_trajectory(profile, PoseSchedule{pose, std::nullopt, pose},
                          noise, delay_s, gnss_sigma, seed);
}

DatasetManifest make_dataset(const DatasetSpec& spec,
                             const std::filesystem::path& out) {
  if (spec.n_traj < 1) throw std::invalid_argument("make_dataset: n_traj >= 1");
  if (spec.delay_fraction < 0 || spec.delay_fraction > 1) {
    throw std::invalid_argument("make_dataset: delay_fraction in [0,1]");
  }
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("make_dataset: cannot create " + out.string());

  const int n_delayed =
      static_cast<int>(std::floor(spec.delay_fraction * spec.n_traj));
  DatasetManifest manifest;
  manifest.seed = spec.seed;
  manifest.duration_s = static_cast<int>(spec.duration_s);
  for (int i = 0; i < spec.n_traj; ++i) {
    const std::uint64_t tseed = derive_seed(spec.seed, 100 + i);
    SpeedProfile profile =
        gen_speed_profile(derive_seed(tseed, 0), spec.duration_s, spec.maneuvers);
    PoseSchedule sched{spec.pose.fixed, std::nullopt, spec.pose.fixed};
    if (spec.pose.random) {
      std::mt19937_64 prng(derive_seed(tseed, 3));
      sched.initial = random_rotation(prng, spec.pose.ranges).first;
      sched.changed = sched.initial;
      if (spec.pose.mid_change) {
        const int dur = static_cast<int>(spec.duration_s);
        std::uniform_int_distribution<int> usec(dur / 4, 3 * dur / 4);
        sched.change_second = usec(prng);
        sched.changed = random_rotation(prng, spec.pose.ranges).first;
      }
    }
    NoiseConfig noise = spec.noise;
    if (spec.accel_bias_max > 0 || spec.gyro_bias_max > 0) {
      std::mt19937_64 brng(derive_seed(tseed, 4));
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      if (spec.accel_bias_max > 0) {
        noise.accel_bias =
            spec.accel_bias_max * Vec3(u(brng), u(brng), u(brng));
      }
      if (spec.gyro_bias_max > 0) {
        noise.gyro_bias = spec.gyro_bias_max * Vec3(u(brng), u(brng), u(brng));
      }
    }
    const int delay = i < n_delayed ? 1 : 0;
    Trajectory traj = synth_trajectory(profile, sched, noise, delay,
                                       spec.gnss_sigma, tseed);
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%03d", i);
    save_trajectory(traj, out / name);
    manifest.entries.push_back(
        DatasetManifest::Entry{name, tseed, delay, sched.initial, noise});
  }
  save_manifest(manifest, out);
  return manifest;
}

}  // namespace dvse
