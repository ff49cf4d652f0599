#include "dvse/featkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dvse {

std::vector<std::span<const Vec3>> window_1s(std::span<const Vec3> samples) {
  std::vector<std::span<const Vec3>> out;
  const size_t n = samples.size() / kSampleHz;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    out.push_back(samples.subspan(k * kSampleHz, kSampleHz));
  }
  return out;
}

static void axis_features(std::span<const Vec3> w, int axis, double* out) {
  const int n = static_cast<int>(w.size());
  double mean = 0.0, mx = -INFINITY, mn = INFINITY, sq = 0.0;
  for (const auto& s : w) {
    const double x = s[axis];
    mean += x;
    sq += x * x;
    mx = std::max(mx, x);
    mn = std::min(mn, x);
  }
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (const auto& s : w) {
    const double d = s[axis] - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  out[0] = std::sqrt(m2);
  out[1] = mx;
  out[2] = mn;
  out[3] = std::sqrt(sq / n);
  if (m2 < 1e-12) {
    out[4] = 0.0;
    out[5] = 0.0;
  } else {
    out[4] = m3 / std::pow(m2, 1.5);
    out[5] = m4 / (m2 * m2);
  }
}

std::array<double, kFeatPerSensor> extract_features(
    std::span<const Vec3> window) {
  if (window.size() != kSampleHz) {
    throw std::invalid_argument("extract_features: window must hold 50 samples");
  }
  std::array<double, kFeatPerSensor> f{};
  for (int axis = 0; axis < 3; ++axis) {
    axis_features(window, axis, f.data() + axis * kFeatPerAxis);
  }
  return f;
}

PreIntegration preintegrate(std::span<const Vec3> window, int t) {
  if (window.size() != kSampleHz) {
    throw std::invalid_argument("preintegrate: window must hold 50 samples");
  }
  Vec3 sum = Vec3::Zero();
  for (const auto& s : window) sum += s;
  return PreIntegration{sum * kSampleDt, t};
}

std::vector<double> Normalizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) {
    throw std::invalid_argument("Normalizer: dimension mismatch");
  }
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    out[i] = (x[i] - mean[i]) / std::max(stddev[i], 1e-6);
  }
  return out;
}

Normalizer fit_normalizer(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) {
    throw std::invalid_argument("fit_normalizer: need at least 2 frames");
  }
  const size_t dim = rows.front().size();
  Normalizer n;
  n.mean.assign(dim, 0.0);
  n.stddev.assign(dim, 0.0);
  for (const auto& r : rows) {
    for (size_t i = 0; i < dim; ++i) n.mean[i] += r[i];
  }
  for (size_t i = 0; i < dim; ++i) n.mean[i] /= rows.size();
  for (const auto& r : rows) {
    for (size_t i = 0; i < dim; ++i) {
      const double d = r[i] - n.mean[i];
      n.stddev[i] += d * d;
    }
  }
  for (size_t i = 0; i < dim; ++i) {
    n.stddev[i] = std::sqrt(n.stddev[i] / rows.size());
  }
  return n;
}

}  // namespace dvse
