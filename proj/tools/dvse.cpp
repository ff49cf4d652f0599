// dvse: simulate drives, train the estimator, evaluate, and run inference.
//
// Exit codes: 0 success, 1 validation error (bad config, bad arguments),
// 2 I/O error (missing or unwritable files).

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dvse/checkpoint.hpp"
#include "dvse/evalkit.hpp"
#include "dvse/simkit.hpp"
#include "dvse/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw dvse::IoError("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw dvse::IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) {
    throw std::invalid_argument("config: expected object at " + where);
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) {
      throw std::invalid_argument("config: unknown key '" + key + "' in " +
                                  where);
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config: bad value for key '" +
                                std::string(key) + "'");
  }
}

dvse::EulerAngles parse_pose(const json& j, const std::string& where) {
  check_keys(j, {"alpha", "beta", "gamma"}, where);
  return dvse::EulerAngles{get_or(j, "alpha", 0.0), get_or(j, "beta", 0.0),
                           get_or(j, "gamma", 0.0)};
}

dvse::AngleRanges parse_ranges(const json& j, const std::string& where) {
  check_keys(j, {"lo", "hi"}, where);
  dvse::AngleRanges r;
  if (j.contains("lo")) {
    auto lo = j.at("lo").get<std::vector<double>>();
    if (lo.size() != 3) throw std::invalid_argument("config: 'lo' needs 3 values");
    for (int i = 0; i < 3; ++i) r.lo[i] = lo[i];
  }
  if (j.contains("hi")) {
    auto hi = j.at("hi").get<std::vector<double>>();
    if (hi.size() != 3) throw std::invalid_argument("config: 'hi' needs 3 values");
    for (int i = 0; i < 3; ++i) r.hi[i] = hi[i];
  }
  return r;
}

dvse::NoiseConfig parse_noise(const json& j) {
  check_keys(j,
             {"accel_bias", "gyro_bias", "accel_white_sigma",
              "gyro_white_sigma", "bias_walk_sigma", "vibration_amp",
              "vibration_hz"},
             "noise");
  dvse::NoiseConfig n;
  auto vec3 = [](const json& a, const char* key) {
    auto v = a.get<std::vector<double>>();
    if (v.size() != 3) {
      throw std::invalid_argument("config: '" + std::string(key) +
                                  "' needs 3 values");
    }
    return dvse::Vec3(v[0], v[1], v[2]);
  };
  if (j.contains("accel_bias")) n.accel_bias = vec3(j.at("accel_bias"), "accel_bias");
  if (j.contains("gyro_bias")) n.gyro_bias = vec3(j.at("gyro_bias"), "gyro_bias");
  n.accel_white_sigma = get_or(j, "accel_white_sigma", 0.0);
  n.gyro_white_sigma = get_or(j, "gyro_white_sigma", 0.0);
  n.bias_walk_sigma = get_or(j, "bias_walk_sigma", 0.0);
  n.vibration_amp = get_or(j, "vibration_amp", 0.0);
  n.vibration_hz = get_or(j, "vibration_hz", 0.0);
  return n;
}

dvse::ManeuverConfig parse_maneuvers(const json& j) {
  check_keys(j,
             {"max_speed", "max_accel", "max_brake", "min_segment_s",
              "max_segment_s", "max_yaw_rate", "forced"},
             "maneuvers");
  dvse::ManeuverConfig m;
  m.max_speed = get_or(j, "max_speed", m.max_speed);
  m.max_accel = get_or(j, "max_accel", m.max_accel);
  m.max_brake = get_or(j, "max_brake", m.max_brake);
  m.min_segment_s = get_or(j, "min_segment_s", m.min_segment_s);
  m.max_segment_s = get_or(j, "max_segment_s", m.max_segment_s);
  m.max_yaw_rate = get_or(j, "max_yaw_rate", m.max_yaw_rate);
  if (j.contains("forced")) {
    for (const auto& s : j.at("forced")) {
      check_keys(s, {"kind", "duration_s", "accel", "yaw_rate"}, "forced[]");
      dvse::ManeuverSegment seg;
      const std::string kind = s.at("kind").get<std::string>();
      if (kind == "idle") seg.kind = dvse::Maneuver::kIdle;
      else if (kind == "accelerate") seg.kind = dvse::Maneuver::kAccelerate;
      else if (kind == "cruise") seg.kind = dvse::Maneuver::kCruise;
      else if (kind == "brake") seg.kind = dvse::Maneuver::kBrake;
      else if (kind == "turn") seg.kind = dvse::Maneuver::kTurn;
      else throw std::invalid_argument("config: unknown maneuver kind '" + kind + "'");
      seg.duration_s = s.at("duration_s").get<double>();
      seg.accel = get_or(s, "accel", 0.0);
      seg.yaw_rate = get_or(s, "yaw_rate", 0.0);
      m.forced.push_back(seg);
    }
  }
  return m;
}

dvse::DatasetSpec parse_dataset_spec(const json& j) {
  check_keys(j,
             {"n_traj", "duration_s", "seed", "pose", "noise", "accel_bias_max",
              "gyro_bias_max", "delay_fraction", "gnss_sigma", "maneuvers"},
             "simulate config");
  dvse::DatasetSpec spec;
  spec.n_traj = get_or(j, "n_traj", spec.n_traj);
  spec.duration_s = get_or(j, "duration_s", spec.duration_s);
  spec.seed = get_or<std::uint64_t>(j, "seed", spec.seed);
  if (j.contains("pose")) {
    const json& p = j.at("pose");
    check_keys(p, {"random", "fixed", "ranges", "mid_change"}, "pose");
    spec.pose.random = get_or(p, "random", false);
    spec.pose.mid_change = get_or(p, "mid_change", false);
    if (p.contains("fixed")) spec.pose.fixed = parse_pose(p.at("fixed"), "pose.fixed");
    if (p.contains("ranges")) spec.pose.ranges = parse_ranges(p.at("ranges"), "pose.ranges");
  }
  if (j.contains("noise")) spec.noise = parse_noise(j.at("noise"));
  spec.accel_bias_max = get_or(j, "accel_bias_max", 0.0);
  spec.gyro_bias_max = get_or(j, "gyro_bias_max", 0.0);
  spec.delay_fraction = get_or(j, "delay_fraction", 0.0);
  spec.gnss_sigma = get_or(j, "gnss_sigma", 0.0);
  if (j.contains("maneuvers")) spec.maneuvers = parse_maneuvers(j.at("maneuvers"));
  return spec;
}

dvse::TrainConfig parse_train_config(const json& j) {
  check_keys(j,
             {"batch_size", "lr", "t_max", "eta_min", "ema_decay", "patience",
              "min_delta", "lambda", "max_epochs", "augmentation", "aug_ranges",
              "loss_matching", "noise_net", "mtn", "core", "split", "seed"},
             "train config");
  dvse::TrainConfig cfg;
  cfg.batch_size = get_or(j, "batch_size", cfg.batch_size);
  cfg.lr = get_or(j, "lr", cfg.lr);
  cfg.t_max = get_or<long>(j, "t_max", cfg.t_max);
  cfg.eta_min = get_or(j, "eta_min", cfg.eta_min);
  cfg.ema_decay = get_or(j, "ema_decay", cfg.ema_decay);
  cfg.patience = get_or(j, "patience", cfg.patience);
  cfg.min_delta = get_or(j, "min_delta", cfg.min_delta);
  cfg.lambda = get_or(j, "lambda", cfg.lambda);
  cfg.max_epochs = get_or(j, "max_epochs", cfg.max_epochs);
  cfg.augmentation = get_or(j, "augmentation", cfg.augmentation);
  if (j.contains("aug_ranges")) {
    cfg.aug_ranges = parse_ranges(j.at("aug_ranges"), "aug_ranges");
  }
  cfg.loss_matching = get_or(j, "loss_matching", cfg.loss_matching);
  cfg.use_noise_net = get_or(j, "noise_net", cfg.use_noise_net);
  cfg.use_mtn = get_or(j, "mtn", cfg.use_mtn);
  cfg.core = get_or<std::string>(j, "core", cfg.core);
  if (cfg.core != "gru" && cfg.core != "lstm" && cfg.core != "tcn") {
    throw std::invalid_argument("config: bad value for key 'core'");
  }
  const std::string split = get_or<std::string>(j, "split", "trajectory");
  if (split == "trajectory") cfg.split_mode = dvse::SplitMode::kTrajectory;
  else if (split == "traditional") cfg.split_mode = dvse::SplitMode::kTraditional;
  else throw std::invalid_argument("config: bad value for key 'split'");
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  return cfg;
}

dvse::ImuStream read_imu_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw dvse::IoError("cannot read " + path.string());
  dvse::ImuStream s;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double row[7];
    const char* p = line.data();
    const char* end = p + line.size();
    for (int c = 0; c < 7; ++c) {
      auto [next, ec] = std::from_chars(p, end, row[c]);
      if (ec != std::errc{}) throw dvse::IoError("bad number in " + path.string());
      p = next;
      if (p < end && *p == ',') ++p;
    }
    s.t.push_back(row[0]);
    s.accel.emplace_back(row[1], row[2], row[3]);
    s.gyro.emplace_back(row[4], row[5], row[6]);
  }
  return s;
}

int cmd_simulate(const fs::path& config, const fs::path& out) {
  const dvse::DatasetSpec spec = parse_dataset_spec(load_json(config));
  const dvse::DatasetManifest m = dvse::make_dataset(spec, out);
  std::cout << "wrote " << m.entries.size() << " trajectories to "
            << out.string() << "\n";
  return 0;
}

int cmd_train(const fs::path& config, const fs::path& data,
              const fs::path& out) {
  const dvse::TrainConfig cfg = parse_train_config(load_json(config));
  const std::vector<dvse::Trajectory> trajs = dvse::load_dataset(data);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw dvse::IoError("cannot create " + out.string());
  std::ofstream metrics(out / "metrics.jsonl", std::ios::trunc);
  if (!metrics) throw dvse::IoError("cannot write metrics under " + out.string());

  dvse::TrainResult result = dvse::train(trajs, cfg, &metrics);

  dvse::CheckpointMeta meta;
  meta.seed = cfg.seed;
  meta.epochs = static_cast<int>(result.epochs.size());
  meta.final_val_loss = result.best_val_loss;
  for (int id : result.split.test_trajectories) {
    meta.test_trajectories.push_back(fs::path(trajs[id].dir).filename().string());
  }
  dvse::checkpoint_save(*result.model, result.normalizer, meta,
                        out / "checkpoint.json");
  std::cout << "trained " << meta.epochs << " epochs, best val loss "
            << result.best_val_loss << "\n";
  return 0;
}

int cmd_eval(const fs::path& ckpt, const fs::path& data, const fs::path& out) {
  dvse::LoadedCheckpoint ck = dvse::checkpoint_load(ckpt);
  dvse::DvseModel model = ck.instantiate();
  std::vector<dvse::Trajectory> all = dvse::load_dataset(data);

  std::vector<dvse::Trajectory> trajs;
  if (ck.meta.test_trajectories.empty()) {
    trajs = std::move(all);
  } else {
    std::set<std::string> wanted(ck.meta.test_trajectories.begin(),
                                 ck.meta.test_trajectories.end());
    for (auto& t : all) {
      if (wanted.count(fs::path(t.dir).filename().string())) {
        trajs.push_back(std::move(t));
      }
    }
    if (trajs.empty()) {
      throw std::invalid_argument(
          "eval: none of the checkpoint's test trajectories found in dataset");
    }
  }

  const std::vector<int> horizons{30, 60};
  dvse::Predictor model_pred = dvse::model_predictor(model, ck.normalizer);
  std::vector<dvse::HorizonReport> reports =
      dvse::evaluate(model_pred, trajs, horizons, "dvse");
  auto raw = dvse::evaluate(
      [](const dvse::Trajectory& t, int s, int h, double v0) {
        return dvse::baseline_raw_integration(t, s, h, v0, false);
      },
      trajs, horizons, "raw_integration");
  auto cv = dvse::evaluate(
      [](const dvse::Trajectory& t, int s, int h, double v0) {
        return dvse::baseline_constant_velocity(h, v0);
      },
      trajs, horizons, "constant_velocity");
  reports.insert(reports.end(), raw.begin(), raw.end());
  reports.insert(reports.end(), cv.begin(), cv.end());

  std::vector<dvse::SeriesRecord> series;
  for (const auto& t : trajs) {
    const int h = (t.duration_s() / dvse::kWindowSeconds) * dvse::kWindowSeconds;
    if (h <= 0) continue;
    dvse::SeriesRecord rec;
    rec.trajectory = fs::path(t.dir).filename().string();
    const double v0 = t.truth_speed[0];
    rec.pred = model_pred(t, 0, h, v0);
    rec.baseline = dvse::baseline_raw_integration(t, 0, h, v0, false);
    for (int k = 1; k <= h; ++k) {
      rec.t.push_back(k);
      rec.truth.push_back(t.truth_speed[k]);
    }
    series.push_back(std::move(rec));
  }
  dvse::report_emit(reports, out, series);
  std::cout << "wrote report for " << trajs.size() << " trajectories to "
            << out.string() << "\n";
  return 0;
}

int cmd_infer(const fs::path& ckpt, const fs::path& imu_path, double v0) {
  dvse::LoadedCheckpoint ck = dvse::checkpoint_load(ckpt);
  dvse::DvseModel model = ck.instantiate();
  const dvse::ImuStream imu = read_imu_csv(imu_path);
  const std::vector<double> speeds =
      dvse::infer_autoregressive(model, ck.normalizer, imu, v0);
  std::printf("t,speed\n");
  for (size_t k = 0; k < speeds.size(); ++k) {
    std::printf("%zu,%.6f\n", k + 1, speeds[k]);
  }
  return 0;
}

int cmd_report(const fs::path& in, const fs::path& out) {
  const std::vector<dvse::HorizonReport> reports = dvse::report_parse(in);
  dvse::report_emit(reports, out);
  std::cout << "rewrote " << reports.size() << " report rows to "
            << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicle speed estimation from smartphone inertial data"};
  app.require_subcommand(1);

  std::string config, data, out, ckpt, imu, in;
  double v0 = 0.0;

  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim->add_option("--config", config, "Simulation config JSON")->required();
  sim->add_option("--out", out, "Output dataset directory")->required();

  CLI::App* tr = app.add_subcommand("train", "Train a model on a dataset");
  tr->add_option("--config", config, "Training config JSON")->required();
  tr->add_option("--data", data, "Dataset directory")->required();
  tr->add_option("--out", out, "Output directory")->required();

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--ckpt", ckpt, "Checkpoint JSON")->required();
  ev->add_option("--data", data, "Dataset directory")->required();
  ev->add_option("--out", out, "Output directory")->required();

  CLI::App* inf = app.add_subcommand("infer", "Per-second speeds from an IMU log");
  inf->add_option("--ckpt", ckpt, "Checkpoint JSON")->required();
  inf->add_option("--imu", imu, "IMU CSV (t,ax,ay,az,gx,gy,gz)")->required();
  inf->add_option("--v0", v0, "Initial forward speed, m/s")->required();

  CLI::App* rep = app.add_subcommand("report", "Validate and re-render a report");
  rep->add_option("--in", in, "report.json path")->required();
  rep->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config, out);
    if (tr->parsed()) return cmd_train(config, data, out);
    if (ev->parsed()) return cmd_eval(ckpt, data, out);
    if (inf->parsed()) return cmd_infer(ckpt, imu, v0);
    if (rep->parsed()) return cmd_report(in, out);
  } catch (const dvse::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
