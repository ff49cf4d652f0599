#pragma once

#include <array>
#include <span>
#include <vector>

#include "dvse/geom.hpp"

namespace dvse {

inline constexpr int kSampleHz = 50;
inline constexpr double kSampleDt = 0.02;
inline constexpr int kFeatPerAxis = 6;
inline constexpr int kFeatPerSensor = 18;

/// Per-second time-domain features for one sensor triplet, axis-major,
/// per axis [std, max, min, rms, skewness, kurtosis].
struct FeatureFrame {
  std::array<double, kFeatPerSensor> acc_feats{};
  std::array<double, kFeatPerSensor> gyro_feats{};
  int t = 0;  // second index
};

/// Per-second accelerometer integral I_t = sum a_i * dt (left Riemann).
struct PreIntegration {
  Vec3 I = Vec3::Zero();
  int t = 0;
};

/// Splits a sample sequence into consecutive non-overlapping 50-sample
/// windows; a trailing partial second is discarded.
std::vector<std::span<const Vec3>> window_1s(std::span<const Vec3> samples);

/// 18 features from one 50-sample window. Population moments; skewness and
/// kurtosis fall back to 0 when the central variance is below 1e-12.
std::array<double, kFeatPerSensor> extract_features(
    std::span<const Vec3> window);

PreIntegration preintegrate(std::span<const Vec3> window, int t = 0);

/// Per-dimension standardization fit on training features only.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::vector<double> apply(std::span<const double> x) const;
};

Normalizer fit_normalizer(const std::vector<std::vector<double>>& rows);

}  // namespace dvse
