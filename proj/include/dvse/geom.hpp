#pragma once

#include <Eigen/Dense>
#include <random>
#include <utility>

namespace dvse {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Intrinsic rotation angles about the x, y, z axes, stored in (-pi, pi].
struct EulerAngles {
  double alpha = 0.0;  // about x
  double beta = 0.0;   // about y
  double gamma = 0.0;  // about z
};

/// Per-axis sampling intervals [lo, hi] in radians.
struct AngleRanges {
  double lo[3] = {-M_PI, -M_PI, -M_PI};
  double hi[3] = {M_PI, M_PI, M_PI};
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Builds R = R_x(alpha) * R_y(beta) * R_z(gamma) acting on column vectors.
/// Throws std::invalid_argument on non-finite input.
Mat3 euler_to_matrix(const EulerAngles& e);

Vec3 rotate(const Mat3& r, const Vec3& v);

/// World gravity vector [0, 0, 9.81] m/s^2.
Vec3 gravity_ref();

/// Draws per-axis uniform angles from the given ranges and returns both the
/// angles and the matrix. Pure function of (rng state, ranges).
std::pair<EulerAngles, Mat3> random_rotation(std::mt19937_64& rng,
                                             const AngleRanges& ranges);

/// Max-norm orthonormality defect ||R^T R - I||_inf.
double orthonormality_defect(const Mat3& r);

}  // namespace dvse
