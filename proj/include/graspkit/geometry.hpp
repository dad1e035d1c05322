#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace graspkit {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm2() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(norm2()); }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{0, 0, 0};
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

struct Vec2 {
  double x = 0, y = 0;
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

/// Unsigned angle between two vectors, in [0, pi]. Robust near 0 and pi.
inline double angle_between(const Vec3& u, const Vec3& v) {
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Shortest circular difference |a - b| on the unit circle, in [0, pi].
inline double circular_diff(double a, double b) {
  double d = std::fabs(std::fmod(a - b, 2.0 * kPi));
  return d > kPi ? 2.0 * kPi - d : d;
}

/// Relative near-equality used by deterministic tie-break ladders.
inline bool near_equal(double a, double b, double rel_tol = 1e-9) {
  return std::fabs(a - b) <= rel_tol * std::max({std::fabs(a), std::fabs(b), 1e-300});
}

struct Mat3 {
  // row-major
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
        r.m[i * 3 + j] = s;
      }
    return r;
  }
};

/// Rotation matrix about a (not necessarily unit) axis by `angle` radians.
inline Mat3 rotation_about_axis(const Vec3& axis, double angle) {
  const Vec3 u = axis.normalized();
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  Mat3 r;
  r.m = {t * u.x * u.x + c,       t * u.x * u.y - s * u.z, t * u.x * u.z + s * u.y,
         t * u.x * u.y + s * u.z, t * u.y * u.y + c,       t * u.y * u.z - s * u.x,
         t * u.x * u.z - s * u.y, t * u.y * u.z + s * u.x, t * u.z * u.z + c};
  return r;
}

/// Eigenvalues of a symmetric 3x3 matrix via cyclic Jacobi sweeps, ascending.
inline std::array<double, 3> symmetric_eigenvalues(std::array<double, 9> a) {
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = std::fabs(a[1]) + std::fabs(a[2]) + std::fabs(a[5]);
    if (off < 1e-300) break;
    const int pq[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (auto& idx : pq) {
      const int p = idx[0], q = idx[1];
      double apq = a[p * 3 + q];
      if (std::fabs(apq) < 1e-300) continue;
      double app = a[p * 3 + p], aqq = a[q * 3 + q];
      double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
      double c = std::cos(theta), s = std::sin(theta);
      // rotate rows/cols p and q
      std::array<double, 9> b = a;
      for (int k = 0; k < 3; ++k) {
        b[p * 3 + k] = c * a[p * 3 + k] - s * a[q * 3 + k];
        b[q * 3 + k] = s * a[p * 3 + k] + c * a[q * 3 + k];
      }
      a = b;
      for (int k = 0; k < 3; ++k) {
        b[k * 3 + p] = c * a[k * 3 + p] - s * a[k * 3 + q];
        b[k * 3 + q] = s * a[k * 3 + p] + c * a[k * 3 + q];
      }
      a = b;
    }
  }
  std::array<double, 3> ev = {a[0], a[4], a[8]};
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Singular values of the row-centered point matrix, ascending.
/// Used to decide whether a point set spans 3D.
inline std::array<double, 3> centered_singular_values(const std::vector<Vec3>& pts) {
  Vec3 c{0, 0, 0};
  for (const auto& p : pts) c += p;
  c = c / static_cast<double>(pts.size());
  std::array<double, 9> cov{};
  for (const auto& p : pts) {
    const Vec3 d = p - c;
    const double v[3] = {d.x, d.y, d.z};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) cov[i * 3 + j] += v[i] * v[j];
  }
  auto ev = symmetric_eigenvalues(cov);
  return {std::sqrt(std::max(0.0, ev[0])), std::sqrt(std::max(0.0, ev[1])),
          std::sqrt(std::max(0.0, ev[2]))};
}

/// Area of the triangle (a, b, c).
inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace graspkit
