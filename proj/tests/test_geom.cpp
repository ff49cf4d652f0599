#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dvse/geom.hpp"

using namespace dvse;

namespace {

// Independent oracle: builds the three axis matrices by hand and multiplies
// them with explicit loops, no shared code with euler_to_matrix.
void oracle_axis_matrices(const EulerAngles& e, double rx[3][3],
                          double ry[3][3], double rz[3][3]) {
  const double ca = std::cos(e.alpha), sa = std::sin(e.alpha);
  const double cb = std::cos(e.beta), sb = std::sin(e.beta);
  const double cg = std::cos(e.gamma), sg = std::sin(e.gamma);
  double x[3][3] = {{1, 0, 0}, {0, ca, -sa}, {0, sa, ca}};
  double y[3][3] = {{cb, 0, sb}, {0, 1, 0}, {-sb, 0, cb}};
  double z[3][3] = {{cg, -sg, 0}, {sg, cg, 0}, {0, 0, 1}};
  std::copy(&x[0][0], &x[0][0] + 9, &rx[0][0]);
  std::copy(&y[0][0], &y[0][0] + 9, &ry[0][0]);
  std::copy(&z[0][0], &z[0][0] + 9, &rz[0][0]);
}

void matmul3(const double a[3][3], const double b[3][3], double out[3][3]) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
      out[i][j] = s;
    }
  }
}

void oracle_matrix(const EulerAngles& e, double out[3][3]) {
  double rx[3][3], ry[3][3], rz[3][3], tmp[3][3];
  oracle_axis_matrices(e, rx, ry, rz);
  matmul3(ry, rz, tmp);
  matmul3(rx, tmp, out);
}

}  // namespace

TEST_CASE("euler_to_matrix identity") {
  const Mat3 r = euler_to_matrix({0, 0, 0});
  CHECK((r - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("euler_to_matrix quarter turn about x") {
  const Mat3 r = euler_to_matrix({M_PI / 2, 0, 0});
  Mat3 want;
  want << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK((r - want).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("euler_to_matrix matches three-matrix oracle") {
  const EulerAngles e{0.3, -0.2, 0.1};
  const Mat3 r = euler_to_matrix(e);
  double want[3][3];
  oracle_matrix(e, want);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(r(i, j) - want[i][j]) <= 1e-12);
}

TEST_CASE("euler_to_matrix rejects non-finite input") {
  CHECK_THROWS_AS(euler_to_matrix({std::nan(""), 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(euler_to_matrix({0, INFINITY, 0}), std::invalid_argument);
}

TEST_CASE("rotate identity and axis permutation") {
  CHECK(rotate(Mat3::Identity(), Vec3(1, 2, 3)) == Vec3(1, 2, 3));
  const Vec3 v = rotate(euler_to_matrix({M_PI / 2, 0, 0}), Vec3(0, 1, 0));
  CHECK(std::abs(v.x()) <= 1e-15);
  CHECK(std::abs(v.y()) <= 1e-15);
  CHECK(std::abs(v.z() - 1.0) <= 1e-15);
}

TEST_CASE("rotate matches oracle matrix-vector product") {
  const EulerAngles e{0.3, -0.2, 0.1};
  double m[3][3];
  oracle_matrix(e, m);
  const double in[3] = {0, 0, 9.81};
  const Vec3 got = rotate(euler_to_matrix(e), Vec3(in[0], in[1], in[2]));
  for (int i = 0; i < 3; ++i) {
    const double want = m[i][0] * in[0] + m[i][1] * in[1] + m[i][2] * in[2];
    CHECK(std::abs(got[i] - want) <= 1e-12);
  }
}

TEST_CASE("gravity reference") {
  CHECK(gravity_ref() == Vec3(0, 0, 9.81));
  CHECK(gravity_ref().norm() == doctest::Approx(9.81).epsilon(1e-15));
  CHECK(rotate(Mat3::Identity(), gravity_ref()) == Vec3(0, 0, 9.81));
}

TEST_CASE("random_rotation degenerate ranges give identity") {
  AngleRanges ranges;
  for (int i = 0; i < 3; ++i) ranges.lo[i] = ranges.hi[i] = 0.0;
  std::mt19937_64 rng(123);
  auto [angles, r] = random_rotation(rng, ranges);
  CHECK(angles.alpha == 0.0);
  CHECK(angles.beta == 0.0);
  CHECK(angles.gamma == 0.0);
  CHECK((r - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random_rotation is deterministic per seed") {
  AngleRanges ranges;
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 10; ++i) {
    auto [ea, ra] = random_rotation(a, ranges);
    auto [eb, rb] = random_rotation(b, ranges);
    CHECK(ea.alpha == eb.alpha);
    CHECK(ea.beta == eb.beta);
    CHECK(ea.gamma == eb.gamma);
    CHECK((ra - rb).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("random_rotation gamma sample mean near zero") {
  AngleRanges ranges;
  std::mt19937_64 rng(7);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) sum += random_rotation(rng, ranges).first.gamma;
  CHECK(std::abs(sum / 10000.0) <= 0.06);
}

TEST_CASE("random_rotation rejects inverted range") {
  AngleRanges ranges;
  ranges.lo[1] = 0.5;
  ranges.hi[1] = -0.5;
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(random_rotation(rng, ranges), std::invalid_argument);
}

TEST_CASE("orthonormality and determinant over 1000 seeded angles") {
  std::mt19937_64 rng(2024);
  AngleRanges ranges;
  for (int i = 0; i < 1000; ++i) {
    auto [angles, r] = random_rotation(rng, ranges);
    (void)angles;
    CHECK(orthonormality_defect(r) <= 1e-9);
    CHECK(std::abs(r.determinant() - 1.0) <= 1e-9);
  }
}

TEST_CASE("rotation preserves norms over 1000 seeded pairs") {
  std::mt19937_64 rng(99);
  AngleRanges ranges;
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = random_rotation(rng, ranges).second;
    const Vec3 v(u(rng), u(rng), u(rng));
    const double nv = v.norm();
    if (nv == 0.0) continue;
    CHECK(std::abs(rotate(r, v).norm() - nv) / nv <= 1e-9);
  }
}

TEST_CASE("planar rotation keeps forward axis in plane") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  for (int i = 0; i < 100; ++i) {
    const Vec3 v = rotate(euler_to_matrix({0, 0, u(rng)}), Vec3(0, 1, 0));
    CHECK(std::abs(v.z()) <= 1e-12);
  }
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(3 * M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(0.5) == doctest::Approx(0.5));
  CHECK(wrap_angle(2 * M_PI + 0.25) == doctest::Approx(0.25));
}
