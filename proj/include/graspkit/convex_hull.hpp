#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "graspkit/errors.hpp"
#include "graspkit/geometry.hpp"

namespace graspkit {

struct HullFacet {
  std::array<int, 3> v{};  // vertex indices, CCW as seen from outside
  Vec3 normal;             // unit outward normal
  double area = 0;
  int patch = -1;          // owning coplanar patch
};

/// Maximal coplanar face of the hull: boundary polygon CCW under the outward
/// normal. Unlike the fan triangles, patch data does not depend on how the
/// polygon was triangulated.
struct HullPatch {
  std::vector<int> polygon;
  Vec3 normal;
  double area = 0;
  double perimeter = 0;
};

/// Convex hull of a small point set (n <= 64).
///
/// Built by supporting-plane enumeration: every triple whose plane has all
/// remaining points on one side contributes a face patch; coplanar patches are
/// merged, reduced to their boundary polygon and fan-triangulated. O(n^4) but
/// exact about which input points are hull vertices, which is what grasp
/// validation needs.
struct SmallHull {
  enum class Status { ok, flat, collinear };

  Status status = Status::ok;
  std::vector<HullFacet> facets;    // 3D case only
  std::vector<HullPatch> patches;   // 3D case only
  std::vector<char> is_vertex;      // per input point
  double total_area = 0;

  // flat case: boundary polygon CCW under `flat_normal`
  std::vector<int> flat_polygon;
  Vec3 flat_normal;

  bool all_points_are_vertices() const {
    for (char c : is_vertex)
      if (!c) return false;
    return true;
  }
};

namespace detail {

/// Monotone-chain 2D hull. Returns CCW indices; collinear boundary points are
/// dropped (strictly convex output).
inline std::vector<int> hull_2d_indices(const std::vector<Vec2>& pts, double cross_tol) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pts[a].x != pts[b].x) return pts[a].x < pts[b].x;
    return pts[a].y < pts[b].y;
  });
  auto build = [&](bool lower) {
    std::vector<int> chain;
    for (int idx = 0; idx < n; ++idx) {
      const int i = order[lower ? idx : n - 1 - idx];
      while (chain.size() >= 2) {
        const Vec2 a = pts[chain[chain.size() - 2]];
        const Vec2 b = pts[chain[chain.size() - 1]];
        if ((b - a).cross(pts[i] - a) > cross_tol) break;
        chain.pop_back();
      }
      chain.push_back(i);
    }
    chain.pop_back();
    return chain;
  };
  std::vector<int> lower = build(true), upper = build(false);
  lower.insert(lower.end(), upper.begin(), upper.end());
  return lower;
}

inline void plane_basis(const Vec3& normal, Vec3& u, Vec3& v) {
  const Vec3 pick = std::fabs(normal.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  u = normal.cross(pick).normalized();
  v = normal.cross(u);
}

}  // namespace detail

/// Options for small_convex_hull. `vertex_rank` supplies a geometry-derived
/// rank per point so that fan triangulation of coplanar patches does not
/// depend on input order; defaults to input index.
struct SmallHullOptions {
  double eps_rel = 1e-9;
  const std::vector<int>* vertex_rank = nullptr;
};

inline SmallHull small_convex_hull(const std::vector<Vec3>& pts,
                                   const SmallHullOptions& opt = {}) {
  const int n = static_cast<int>(pts.size());
  SmallHull out;
  out.is_vertex.assign(n, 0);
  if (n > 64) throw Error("small_convex_hull: point set too large");
  if (n < 3) {
    out.status = SmallHull::Status::collinear;
    return out;
  }

  double scale = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) scale = std::max(scale, distance(pts[i], pts[j]));
  const double dist_tol = std::max(opt.eps_rel * scale, 1e-300);
  const double area_tol = 0.5 * opt.eps_rel * scale * scale;

  auto rank_of = [&](int i) { return opt.vertex_rank ? (*opt.vertex_rank)[i] : i; };

  // widest triangle, used both as degeneracy witness and flat reference plane
  double best_area = 0;
  std::array<int, 3> best_tri{0, 1, 2};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const double a = triangle_area(pts[i], pts[j], pts[k]);
        if (a > best_area) {
          best_area = a;
          best_tri = {i, j, k};
        }
      }
  if (best_area <= area_tol) {
    out.status = SmallHull::Status::collinear;
    return out;
  }

  const Vec3 ref_n = (pts[best_tri[1]] - pts[best_tri[0]])
                         .cross(pts[best_tri[2]] - pts[best_tri[0]])
                         .normalized();
  bool flat = true;
  for (int i = 0; i < n && flat; ++i)
    if (std::fabs((pts[i] - pts[best_tri[0]]).dot(ref_n)) > dist_tol) flat = false;

  if (flat) {
    out.status = SmallHull::Status::flat;
    out.flat_normal = ref_n;
    Vec3 u, v;
    detail::plane_basis(ref_n, u, v);
    std::vector<Vec2> uv(n);
    for (int i = 0; i < n; ++i) uv[i] = {pts[i].dot(u), pts[i].dot(v)};
    out.flat_polygon = detail::hull_2d_indices(uv, 2.0 * area_tol);
    for (int i : out.flat_polygon) out.is_vertex[i] = 1;
    return out;
  }

  // supporting-plane enumeration, deduplicated by on-plane point mask
  struct Patch {
    std::uint64_t mask;
    Vec3 outward;
    int ref;
  };
  std::vector<Patch> patches;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Vec3 nn = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
        const double nl = nn.norm();
        if (nl <= 2.0 * area_tol) continue;
        nn = nn / nl;
        int above = 0, below = 0;
        std::uint64_t mask = 0;
        for (int m = 0; m < n; ++m) {
          const double d = (pts[m] - pts[i]).dot(nn);
          if (d > dist_tol)
            ++above;
          else if (d < -dist_tol)
            ++below;
          else
            mask |= (1ULL << m);
        }
        if (above > 0 && below > 0) continue;
        const Vec3 outward = above == 0 ? nn : -nn;
        bool seen = false;
        for (const auto& p : patches)
          if (p.mask == mask && p.outward.dot(outward) > 0) {
            seen = true;
            break;
          }
        if (!seen) patches.push_back({mask, outward, i});
      }

  for (const auto& patch : patches) {
    std::vector<int> ids;
    for (int m = 0; m < n; ++m)
      if (patch.mask & (1ULL << m)) ids.push_back(m);
    Vec3 u, v;
    detail::plane_basis(patch.outward, u, v);
    std::vector<Vec2> uv(ids.size());
    for (size_t t = 0; t < ids.size(); ++t)
      uv[t] = {pts[ids[t]].dot(u), pts[ids[t]].dot(v)};
    std::vector<int> poly = detail::hull_2d_indices(uv, 2.0 * area_tol);
    if (poly.size() < 3) continue;

    // rotate the polygon so the fan root is the rank-minimal vertex
    size_t root = 0;
    for (size_t t = 1; t < poly.size(); ++t)
      if (rank_of(ids[poly[t]]) < rank_of(ids[poly[root]])) root = t;
    std::rotate(poly.begin(), poly.begin() + static_cast<long>(root), poly.end());

    HullPatch hp;
    hp.normal = patch.outward;
    for (int t : poly) {
      out.is_vertex[ids[t]] = 1;
      hp.polygon.push_back(ids[t]);
    }
    for (size_t t = 0; t < poly.size(); ++t)
      hp.perimeter += distance(pts[ids[poly[t]]], pts[ids[poly[(t + 1) % poly.size()]]]);
    const int patch_id = static_cast<int>(out.patches.size());
    for (size_t t = 1; t + 1 < poly.size(); ++t) {
      HullFacet f;
      f.v = {ids[poly[0]], ids[poly[t]], ids[poly[t + 1]]};
      f.normal = patch.outward;
      f.area = triangle_area(pts[f.v[0]], pts[f.v[1]], pts[f.v[2]]);
      f.patch = patch_id;
      out.facets.push_back(f);
      out.total_area += f.area;
      hp.area += f.area;
    }
    out.patches.push_back(hp);
  }
  return out;
}

/// Signed volume of a closed, outward-oriented triangulated surface.
inline double facets_volume(const std::vector<HullFacet>& facets,
                            const std::vector<Vec3>& pts) {
  double six_v = 0;
  for (const auto& f : facets)
    six_v += pts[f.v[0]].dot(pts[f.v[1]].cross(pts[f.v[2]]));
  return six_v / 6.0;
}

}  // namespace graspkit
