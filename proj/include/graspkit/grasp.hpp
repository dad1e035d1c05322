#pragma once

#include <string>
#include <vector>

#include "graspkit/errors.hpp"
#include "graspkit/geometry.hpp"

namespace graspkit {

enum class Dimensionality { planar, spatial };

inline std::string to_string(Dimensionality d) {
  return d == Dimensionality::planar ? "planar" : "spatial";
}

inline Dimensionality dimensionality_from_string(const std::string& s) {
  if (s == "planar") return Dimensionality::planar;
  if (s == "spatial") return Dimensionality::spatial;
  throw ConfigError("unknown dimensionality: " + s);
}

/// A raw grasp observation: n contact points plus optional unit inward
/// normals. Planar grasps keep z == 0.
struct Grasp {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one unit vector per point
  Dimensionality dimensionality = Dimensionality::spatial;

  int fingers() const { return static_cast<int>(points.size()); }
  bool with_normals() const { return !normals.empty(); }
};

/// Shape/shape-invariant validation (not degeneracy).
inline void validate_grasp(const Grasp& g) {
  const int n = g.fingers();
  if (n < 2) throw Error("grasp needs at least 2 contacts");
  if (g.with_normals()) {
    if (n < 3) throw Error("normals require at least 3 contacts");
    if (static_cast<int>(g.normals.size()) != n)
      throw ShapeMismatch("normal count differs from contact count");
    for (const auto& nn : g.normals)
      if (std::fabs(nn.norm() - 1.0) > 1e-9)
        throw Error("grasp normals must be unit length");
  }
  if (g.dimensionality == Dimensionality::planar) {
    double scale = 1e-12;
    for (const auto& p : g.points) scale = std::max({scale, std::fabs(p.x), std::fabs(p.y)});
    for (const auto& p : g.points)
      if (std::fabs(p.z) > 1e-9 * scale)
        throw ShapeMismatch("planar grasp has out-of-plane contacts");
    for (const auto& nn : g.normals)
      if (std::fabs(nn.z) > 1e-9)
        throw ShapeMismatch("planar grasp has out-of-plane normals");
  }
}

/// Degeneracy predicate used before hull construction. Spatial grasps with
/// n >= 4 must span 3D: the smallest singular value of the centered point
/// matrix must be at least 1e-6 of the largest.
inline bool grasp_spans_space(const Grasp& g) {
  const int n = g.fingers();
  if (n == 2) return distance(g.points[0], g.points[1]) >= 1e-12;
  if (g.dimensionality == Dimensionality::spatial && n >= 4) {
    const auto sv = centered_singular_values(g.points);
    return sv[0] >= 1e-6 * sv[2];
  }
  // n == 3 (or planar): non-collinear
  double scale = 0, best = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) scale = std::max(scale, distance(g.points[i], g.points[j]));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        best = std::max(best, triangle_area(g.points[i], g.points[j], g.points[k]));
  return best > 1e-9 * scale * scale;
}

/// Apply a rigid transform (rotation + translation) to points and normals.
inline Grasp transformed(const Grasp& g, const Mat3& rot, const Vec3& shift) {
  Grasp out = g;
  for (auto& p : out.points) p = rot * p + shift;
  for (auto& n : out.normals) n = rot * n;
  return out;
}

/// Uniform scaling of the contact points; normals are directions and stay put.
inline Grasp scaled(const Grasp& g, double xi) {
  Grasp out = g;
  for (auto& p : out.points) p = p * xi;
  return out;
}

}  // namespace graspkit
