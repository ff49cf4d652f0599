#include "dvse/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace dvse {

using nlohmann::json;
namespace fs = std::filesystem;

double percentile_nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  std::sort(values.begin(), values.end());
  const size_t rank = static_cast<size_t>(
      std::ceil(q * static_cast<double>(values.size())));
  return values[std::max<size_t>(rank, 1) - 1];
}

std::vector<HorizonReport> evaluate(const Predictor& predict,
                                    const std::vector<Trajectory>& trajs,
                                    const std::vector<int>& horizons,
                                    const std::string& method) {
  std::vector<HorizonReport> out;
  for (int H : horizons) {
    HorizonReport rep;
    rep.method = method;
    rep.horizon_s = H;
    std::vector<double> vel_errors;
    std::vector<double> dist_errors;
    for (const auto& traj : trajs) {
      const int dur = traj.duration_s();
      if (dur < H) {
        ++rep.n_skipped;
        continue;
      }
      for (int start = 0; start + H <= dur; start += H) {
        const double v0 = traj.truth_speed[start];
        std::vector<double> pred = predict(traj, start, H, v0);
        if (static_cast<int>(pred.size()) != H) {
          throw std::runtime_error("evaluate: predictor returned wrong length");
        }
        double pred_dist = 0.0, truth_dist = 0.0;
        for (int k = 1; k <= H; ++k) {
          const double truth = traj.truth_speed[start + k];
          vel_errors.push_back(std::abs(pred[k - 1] - truth));
          pred_dist += pred[k - 1];
          truth_dist += truth;
        }
        dist_errors.push_back(std::abs(pred_dist - truth_dist));
        ++rep.n_windows;
      }
    }
    if (rep.n_windows == 0) {
      throw std::invalid_argument("evaluate: no trajectory long enough for horizon");
    }
    rep.vel_mae = std::accumulate(vel_errors.begin(), vel_errors.end(), 0.0) /
                  vel_errors.size();
    rep.vel_p80 = percentile_nearest_rank(vel_errors, 0.8);
    rep.dist_mae = std::accumulate(dist_errors.begin(), dist_errors.end(), 0.0) /
                   dist_errors.size();
    rep.dist_p80 = percentile_nearest_rank(dist_errors, 0.8);
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<double> baseline_raw_integration(const Trajectory& traj,
                                             int start_second, int horizon_s,
                                             double v0, bool use_true_pose) {
  const Vec3 g = gravity_ref();
  std::vector<double> out;
  out.reserve(horizon_s);
  double v = v0;
  for (int k = 0; k < horizon_s; ++k) {
    const int sec = start_second + k;
    const Mat3 r = use_true_pose ? euler_to_matrix(traj.truth_pose[sec])
                                 : Mat3::Identity();
    double dv = 0.0;
    const int base = sec * kSampleHz;
    for (int i = 0; i < kSampleHz; ++i) {
      const Vec3 a_vehicle = r * traj.imu.accel[base + i] - g;
      dv += a_vehicle.y() * kSampleDt;
    }
    v += dv;
    out.push_back(v);
  }
  return out;
}

std::vector<double> baseline_constant_velocity(int horizon_s, double v0) {
  return std::vector<double>(horizon_s, v0);
}

Predictor model_predictor(DvseModel& model, const Normalizer& normalizer) {
  return [&model, &normalizer](const Trajectory& traj, int start_second,
                               int horizon_s, double v0) {
    ImuStream slice;
    const int base = start_second * kSampleHz;
    const int count = horizon_s * kSampleHz;
    slice.t.assign(traj.imu.t.begin() + base, traj.imu.t.begin() + base + count);
    slice.accel.assign(traj.imu.accel.begin() + base,
                       traj.imu.accel.begin() + base + count);
    slice.gyro.assign(traj.imu.gyro.begin() + base,
                      traj.imu.gyro.begin() + base + count);
    return infer_autoregressive(model, normalizer, slice, v0);
  };
}

namespace {

json report_to_json(const HorizonReport& r) {
  return json{{"method", r.method},     {"horizon_s", r.horizon_s},
              {"vel_mae", r.vel_mae},   {"vel_p80", r.vel_p80},
              {"dist_mae", r.dist_mae}, {"dist_p80", r.dist_p80},
              {"n_windows", r.n_windows}, {"n_skipped", r.n_skipped}};
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

}  // namespace

void report_emit(const std::vector<HorizonReport>& reports,
                 const fs::path& dir, const std::vector<SeriesRecord>& series) {
  if (reports.empty()) {
    throw std::invalid_argument("report_emit: empty report list");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("report_emit: cannot create " + dir.string());

  json j;
  j["version"] = "dvse-report/1";
  j["reports"] = json::array();
  for (const auto& r : reports) j["reports"].push_back(report_to_json(r));
  write_file(dir / "report.json", j.dump(2) + "\n");

  std::string csv = "method,horizon,vel_mae,vel_p80,dist_mae,dist_p80\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f,%.6f\n",
                  r.method.c_str(), r.horizon_s, r.vel_mae, r.vel_p80,
                  r.dist_mae, r.dist_p80);
    csv += buf;
  }
  write_file(dir / "report.csv", csv);

  for (const auto& s : series) {
    std::string sc = "t,truth,pred,baseline\n";
    for (size_t i = 0; i < s.t.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f\n", s.t[i],
                    s.truth[i], s.pred[i], s.baseline[i]);
      sc += buf;
    }
    write_file(dir / (s.trajectory + "_series.csv"), sc);
  }
}

std::vector<HorizonReport> report_parse(const fs::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot read " + json_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed report: " + std::string(e.what()));
  }
  if (j.at("version").get<std::string>() != "dvse-report/1") {
    throw std::invalid_argument("unsupported report version");
  }
  std::vector<HorizonReport> out;
  for (const auto& r : j.at("reports")) {
    HorizonReport rep;
    rep.method = r.at("method").get<std::string>();
    rep.horizon_s = r.at("horizon_s").get<int>();
    rep.vel_mae = r.at("vel_mae").get<double>();
    rep.vel_p80 = r.at("vel_p80").get<double>();
    rep.dist_mae = r.at("dist_mae").get<double>();
    rep.dist_p80 = r.at("dist_p80").get<double>();
    rep.n_windows = r.at("n_windows").get<int>();
    rep.n_skipped = r.at("n_skipped").get<int>();
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace dvse
