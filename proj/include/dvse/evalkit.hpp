#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dvse/dataset.hpp"
#include "dvse/models.hpp"

namespace dvse {

/// Velocity and integrated-distance errors over one GNSS-free horizon.
struct HorizonReport {
  std::string method;
  int horizon_s = 0;  // 30 or 60
  double vel_mae = 0.0;
  double vel_p80 = 0.0;
  double dist_mae = 0.0;
  double dist_p80 = 0.0;
  int n_windows = 0;
  int n_skipped = 0;  // trajectories too short for the horizon
};

/// Produces per-second speed estimates for the horizon window starting at
/// whole second `start`, seeded with v0 = truth speed at `start`.
using Predictor = std::function<std::vector<double>(
    const Trajectory& traj, int start_second, int horizon_s, double v0)>;

/// Non-overlapping horizon windows, truth-seeded v0; velocity errors pooled
/// per second, distance error per window; p80 is the nearest-rank
/// (ceil(0.8 n)-th) order statistic.
std::vector<HorizonReport> evaluate(const Predictor& predict,
                                    const std::vector<Trajectory>& trajs,
                                    const std::vector<int>& horizons,
                                    const std::string& method);

/// Rotates accel by the ground-truth pose (or identity), subtracts gravity,
/// and integrates the forward component from v0. A learning-free comparator.
std::vector<double> baseline_raw_integration(const Trajectory& traj,
                                             int start_second, int horizon_s,
                                             double v0, bool use_true_pose);

std::vector<double> baseline_constant_velocity(int horizon_s, double v0);

/// Predictor adapter over a trained model.
Predictor model_predictor(DvseModel& model, const Normalizer& normalizer);

/// Per-second series for external plotting (one trajectory).
struct SeriesRecord {
  std::string trajectory;
  std::vector<double> t;
  std::vector<double> truth;
  std::vector<double> pred;
  std::vector<double> baseline;
};

/// Writes report.json (schema dvse-report/1), report.csv, and per-trajectory
/// series CSVs. Empty report list is an error and writes nothing.
void report_emit(const std::vector<HorizonReport>& reports,
                 const std::filesystem::path& dir,
                 const std::vector<SeriesRecord>& series = {});

std::vector<HorizonReport> report_parse(const std::filesystem::path& json_path);

/// Nearest-rank percentile: the ceil(q*n)-th smallest value.
double percentile_nearest_rank(std::vector<double> values, double q);

}  // namespace dvse
