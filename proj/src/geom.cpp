#include "dvse/geom.hpp"

#include <cmath>
#include <stdexcept>

namespace dvse {

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

Mat3 euler_to_matrix(const EulerAngles& e) {
  if (!std::isfinite(e.alpha) || !std::isfinite(e.beta) ||
      !std::isfinite(e.gamma)) {
    throw std::invalid_argument("euler_to_matrix: non-finite angle");
  }
  const double ca = std::cos(e.alpha), sa = std::sin(e.alpha);
  const double cb = std::cos(e.beta), sb = std::sin(e.beta);
  const double cg = std::cos(e.gamma), sg = std::sin(e.gamma);
  Mat3 r;
  // Closed form of R_x(a) * R_y(b) * R_z(g).
  r << cb * cg, -cb * sg, sb,
       ca * sg + sa * sb * cg, ca * cg - sa * sb * sg, -sa * cb,
       sa * sg - ca * sb * cg, sa * cg + ca * sb * sg, ca * cb;
  return r;
}

Vec3 rotate(const Mat3& r, const Vec3& v) { return r * v; }

Vec3 gravity_ref() { return Vec3(0.0, 0.0, 9.81); }

std::pair<EulerAngles, Mat3> random_rotation(std::mt19937_64& rng,
                                             const AngleRanges& ranges) {
  double a[3];
  for (int i = 0; i < 3; ++i) {
    if (ranges.lo[i] > ranges.hi[i]) {
      throw std::invalid_argument("random_rotation: inverted range");
    }
    if (ranges.lo[i] == ranges.hi[i]) {
      a[i] = ranges.lo[i];
    } else {
      std::uniform_real_distribution<double> dist(ranges.lo[i], ranges.hi[i]);
      a[i] = dist(rng);
    }
  }
  EulerAngles e{wrap_angle(a[0]), wrap_angle(a[1]), wrap_angle(a[2])};
  return {e, euler_to_matrix(e)};
}

double orthonormality_defect(const Mat3& r) {
  Mat3 d = r.transpose() * r - Mat3::Identity();
  return d.cwiseAbs().maxCoeff();
}

}  // namespace dvse
