#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "graspkit/convex_hull.hpp"
#include "graspkit/errors.hpp"
#include "graspkit/grasp.hpp"

namespace graspkit {

// ---------------------------------------------------------------------------
// Parameterization vectors
// ---------------------------------------------------------------------------

/// Metadata describing the layout of a parameterization vector.
struct ParamShape {
  int fingers = 0;
  bool with_normals = false;
  bool normalized = false;
  Dimensionality dimensionality = Dimensionality::spatial;

  bool operator==(const ParamShape& o) const {
    return fingers == o.fingers && with_normals == o.with_normals &&
           normalized == o.normalized && dimensionality == o.dimensionality;
  }
  bool operator!=(const ParamShape& o) const { return !(*this == o); }
};

enum class ComponentKind {
  interior_angle,  // (0, pi)
  length,          // > 0, the scale-carrying entries
  dihedral,        // signed fold angle, (-pi, pi] circular; (0, pi] on convex chains
  azimuth,         // (-pi, pi], circular
  elevation,       // [-pi/2, pi/2]
  normal_angle,    // planar normal vs following edge, (-pi, pi], circular
};

/// Components living on the circle, where differences wrap at +-pi.
inline bool is_circular(ComponentKind k) {
  return k == ComponentKind::dihedral || k == ComponentKind::azimuth ||
         k == ComponentKind::normal_angle;
}

/// Vector dimension w for a grasp of n fingers:
/// spatial 3n-6 (+2n with normals), planar 2n-3 (+n), n = 2 always 1.
inline int param_dimension(int fingers, bool with_normals, Dimensionality dim) {
  if (fingers < 2) throw Error("param_dimension: need n >= 2");
  if (fingers == 2) {
    if (with_normals) throw Error("two-finger grasps have no normal parameterization");
    return 1;
  }
  if (dim == Dimensionality::spatial)
    return 3 * fingers - 6 + (with_normals ? 2 * fingers : 0);
  return 2 * fingers - 3 + (with_normals ? fingers : 0);
}

inline std::vector<ComponentKind> component_kinds(const ParamShape& s) {
  std::vector<ComponentKind> kinds;
  const int n = s.fingers;
  if (n == 2) return {ComponentKind::length};
  if (s.dimensionality == Dimensionality::spatial) {
    kinds = {ComponentKind::interior_angle, ComponentKind::interior_angle,
             ComponentKind::length};
    for (int j = 0; j < n - 3; ++j) {
      kinds.push_back(ComponentKind::interior_angle);
      kinds.push_back(ComponentKind::interior_angle);
      kinds.push_back(ComponentKind::dihedral);
    }
    if (s.with_normals)
      for (int k = 0; k < n; ++k) {
        kinds.push_back(ComponentKind::azimuth);
        kinds.push_back(ComponentKind::elevation);
      }
  } else {
    for (int k = 0; k < n - 1; ++k) kinds.push_back(ComponentKind::interior_angle);
    for (int k = 0; k < n - 2; ++k) kinds.push_back(ComponentKind::length);
    if (s.with_normals)
      for (int k = 0; k < n; ++k) kinds.push_back(ComponentKind::normal_angle);
  }
  return kinds;
}

/// The injective grasp descriptor q.
struct ParamVector {
  std::vector<double> values;
  ParamShape shape;

  int dimension() const { return static_cast<int>(values.size()); }
};

/// Euclidean distance with wrap-around differences on circular components.
inline double vector_distance(const ParamVector& a, const ParamVector& b) {
  if (a.shape != b.shape || a.values.size() != b.values.size())
    throw ShapeMismatch("vector_distance on mismatched shapes");
  const auto kinds = component_kinds(a.shape);
  double s = 0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    const double d = is_circular(kinds[i])
                         ? circular_diff(a.values[i], b.values[i])
                         : a.values[i] - b.values[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Divide the scale-carrying entries by the polyhedron's scale anchor
/// A = sqrt(total facet area), making the vector size-invariant: similar
/// polyhedra have areas in the square of their edge ratio, so every length
/// entry lands at the same value for any uniform scaling of the grasp.
/// Two-finger vectors cannot be normalized: d/A is always 1.
inline ParamVector normalize_scale(const ParamVector& v, double scale_anchor) {
  if (v.shape.normalized) throw NotApplicable("vector already scale-normalized");
  if (v.shape.fingers == 2)
    throw NotApplicable("two-finger vectors cannot be scale-normalized");
  if (!(scale_anchor > 0)) throw Error("normalize_scale: anchor must be positive");
  ParamVector out = v;
  const auto kinds = component_kinds(v.shape);
  for (size_t i = 0; i < out.values.size(); ++i)
    if (kinds[i] == ComponentKind::length) out.values[i] /= scale_anchor;
  out.shape.normalized = true;
  return out;
}

// ---------------------------------------------------------------------------
// Chain construction machinery
// ---------------------------------------------------------------------------

namespace detail {

/// Geometry-derived per-point ranks: sort by (distance to subset centroid,
/// distance to the farthest subset point). Invariant under rigid motion and
/// input permutation; exactly tied keys share a rank, which only happens on
/// symmetric configurations where any choice yields the same parameters.
inline std::vector<int> subset_ranks(const std::vector<Vec3>& pts) {
  const int n = static_cast<int>(pts.size());
  Vec3 c{0, 0, 0};
  for (const auto& p : pts) c += p;
  c = c / static_cast<double>(n);
  std::vector<std::pair<double, double>> key(n);
  for (int i = 0; i < n; ++i) {
    double far = 0;
    for (int j = 0; j < n; ++j) far = std::max(far, distance(pts[i], pts[j]));
    key[i] = {distance(pts[i], c), far};
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return key[a] < key[b]; });
  std::vector<int> rank(n);
  for (int t = 0; t < n; ++t) {
    if (t > 0 && key[order[t]] == key[order[t - 1]])
      rank[order[t]] = rank[order[t - 1]];
    else
      rank[order[t]] = t;
  }
  return rank;
}

/// -1 / 0 / +1 three-way comparison with relative tolerance.
inline int cmp_tol(double a, double b) {
  if (near_equal(a, b)) return 0;
  return a < b ? -1 : 1;
}

/// Like cmp_tol, but tolerant near zero: for bounded keys (angles, unit-vector
/// dot products), rounding noise around 0 must not be decisive.
inline int cmp_key(double a, double b) {
  if (std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)})) return 0;
  return a < b ? -1 : 1;
}

struct PatchMetrics {
  double area = 0;
  double perimeter = 0;
  std::vector<double> edges_desc;  // boundary edge lengths, descending
  std::vector<int> ranks_asc;      // polygon vertex ranks, ascending
};

inline PatchMetrics patch_metrics(const HullPatch& p, const std::vector<Vec3>& pts,
                                  const std::vector<int>& ranks) {
  PatchMetrics m;
  m.area = p.area;
  m.perimeter = p.perimeter;
  const size_t k = p.polygon.size();
  for (size_t i = 0; i < k; ++i) {
    m.edges_desc.push_back(distance(pts[p.polygon[i]], pts[p.polygon[(i + 1) % k]]));
    m.ranks_asc.push_back(ranks[p.polygon[i]]);
  }
  std::sort(m.edges_desc.rbegin(), m.edges_desc.rend());
  std::sort(m.ranks_asc.begin(), m.ranks_asc.end());
  return m;
}

/// Tie-break ladder: larger area, then larger perimeter, then lexicographically
/// larger sorted edge lengths, then smaller sorted vertex ranks.
inline bool metrics_precede(const PatchMetrics& a, const PatchMetrics& b) {
  if (int c = cmp_tol(a.area, b.area)) return c > 0;
  if (int c = cmp_tol(a.perimeter, b.perimeter)) return c > 0;
  const size_t ne = std::min(a.edges_desc.size(), b.edges_desc.size());
  for (size_t i = 0; i < ne; ++i)
    if (int c = cmp_tol(a.edges_desc[i], b.edges_desc[i])) return c > 0;
  if (a.edges_desc.size() != b.edges_desc.size())
    return a.edges_desc.size() > b.edges_desc.size();
  return a.ranks_asc < b.ranks_asc;
}

/// Hinge frame at a directed edge a->b (child direction) against a parent
/// plane: e along the edge, g_parent in the parent plane pointing into the
/// parent region, n_parent the parent outward normal.
struct Hinge {
  Vec3 a, b;
  Vec3 e;
  Vec3 n_parent;
  Vec3 g_parent;
};

inline Hinge make_hinge(const Vec3& a, const Vec3& b, const Vec3& parent_normal) {
  Hinge h;
  h.a = a;
  h.b = b;
  h.e = (b - a).normalized();
  h.n_parent = parent_normal;
  h.g_parent = h.e.cross(parent_normal);
  return h;
}

/// Interior angles at a and b plus the signed fold angle of triangle (a,b,apex)
/// against the parent plane. Folds toward the hull interior give (0, pi].
inline void hinge_angles(const Hinge& h, const Vec3& apex, double& g1, double& g2,
                         double& theta) {
  g1 = angle_between(h.b - h.a, apex - h.a);
  g2 = angle_between(h.a - h.b, apex - h.b);
  const Vec3 w = apex - h.a;
  const Vec3 in_plane = w - h.e * w.dot(h.e);
  const Vec3 g_child = in_plane.normalized();
  theta = std::atan2(-g_child.dot(h.n_parent), g_child.dot(h.g_parent));
  if (theta <= -kPi) theta = kPi;  // fold angle lives in (-pi, pi]
}

/// Place the apex from (g1, g2, theta). Throws InfeasibleVector on parameter
/// combinations no triangle/fold can realize.
inline Vec3 hinge_apex(const Hinge& h, double g1, double g2, double theta) {
  if (!(g1 > 0 && g1 < kPi) || !(g2 > 0 && g2 < kPi) || !(g1 + g2 < kPi))
    throw InfeasibleVector("interior angles do not form a triangle");
  if (!(theta >= -kPi - 1e-12 && theta <= kPi + 1e-12))
    throw InfeasibleVector("fold angle out of range");
  const double len = distance(h.a, h.b);
  const double r = len * std::sin(g2) / std::sin(g1 + g2);
  const Vec3 g_child = h.g_parent * std::cos(theta) - h.n_parent * std::sin(theta);
  return h.a + (h.e * std::cos(g1) + g_child * std::sin(g1)) * r;
}

/// Next attachment site for the parameterization chain, derived purely from
/// the already-placed points (so reconstruction replays the same choices):
/// the longest boundary edge of the placed set's hull, hinged against the
/// ladder-preferred adjacent face patch. Ties resolve by placement order,
/// which the forward pass and reconstruction share exactly; geometric rank
/// keys would collide on symmetric placed subsets (box grids) and then flip
/// under reconstruction's rounding.
struct Attachment {
  int va = -1, vb = -1;  // indices into `placed`, child direction va->vb
  Vec3 parent_normal;
};

inline Attachment select_attachment(const std::vector<Vec3>& placed,
                                    const Vec3& t1_normal) {
  std::vector<int> ranks(placed.size());
  std::iota(ranks.begin(), ranks.end(), 0);  // placement order
  SmallHullOptions opt;
  opt.vertex_rank = &ranks;
  const SmallHull hull = small_convex_hull(placed, opt);
  if (hull.status == SmallHull::Status::collinear)
    throw DegenerateGrasp("placed points collapsed to a line");

  struct Candidate {
    int va, vb;
    Vec3 parent_normal;
    double length;
    PatchMetrics parent;
    std::array<int, 2> rank_pair;
  };
  std::vector<Candidate> cands;

  if (hull.status == SmallHull::Status::flat) {
    std::vector<int> poly = hull.flat_polygon;
    if (hull.flat_normal.dot(t1_normal) < 0) std::reverse(poly.begin(), poly.end());
    const size_t k = poly.size();
    for (size_t i = 0; i < k; ++i) {
      const int u = poly[i], v = poly[(i + 1) % k];
      Candidate c;
      c.va = v;
      c.vb = u;  // child is on the far side of the CCW region edge
      c.parent_normal = t1_normal;
      c.length = distance(placed[u], placed[v]);
      c.rank_pair = {std::min(ranks[u], ranks[v]), std::max(ranks[u], ranks[v])};
      cands.push_back(std::move(c));
    }
  } else {
    std::vector<PatchMetrics> pm;
    pm.reserve(hull.patches.size());
    for (const auto& p : hull.patches) pm.push_back(patch_metrics(p, placed, ranks));

    struct EdgeSide {
      int patch, u, v;
    };
    std::vector<std::pair<std::pair<int, int>, EdgeSide>> sides;
    for (size_t pi = 0; pi < hull.patches.size(); ++pi) {
      const auto& poly = hull.patches[pi].polygon;
      for (size_t i = 0; i < poly.size(); ++i) {
        const int u = poly[i], v = poly[(i + 1) % poly.size()];
        sides.push_back({{std::min(u, v), std::max(u, v)},
                         {static_cast<int>(pi), u, v}});
      }
    }
    std::sort(sides.begin(), sides.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 0; i + 1 < sides.size(); i += 2) {
      if (sides[i].first != sides[i + 1].first)
        throw Error("partial hull boundary is not edge-manifold");
      const EdgeSide* s0 = &sides[i].second;
      const EdgeSide* s1 = &sides[i + 1].second;
      if (metrics_precede(pm[s1->patch], pm[s0->patch])) std::swap(s0, s1);
      Candidate c;
      c.va = s0->v;
      c.vb = s0->u;  // reversed direction of the parent-side boundary edge
      c.parent_normal = hull.patches[s0->patch].normal;
      c.length = distance(placed[s0->u], placed[s0->v]);
      c.parent = pm[s0->patch];
      c.rank_pair = {std::min(ranks[s0->u], ranks[s0->v]),
                     std::max(ranks[s0->u], ranks[s0->v])};
      cands.push_back(std::move(c));
    }
  }

  const Candidate* best = &cands.front();
  for (const auto& c : cands) {
    if (&c == best) continue;
    const int lc = cmp_tol(c.length, best->length);
    if (lc > 0 || (lc == 0 && (metrics_precede(c.parent, best->parent) ||
                               (!metrics_precede(best->parent, c.parent) &&
                                c.rank_pair < best->rank_pair))))
      best = &c;
  }
  return {best->va, best->vb, best->parent_normal};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Grasp polyhedron
// ---------------------------------------------------------------------------

/// One chain element past t1: the triangle hinged at `edge` (directed as in
/// the new triangle) introducing vertex `apex`.
struct ChainStep {
  std::array<int, 2> edge{};  // grasp point indices (v_a, v_b)
  int apex = -1;
  Vec3 parent_normal;
  double gamma1 = 0, gamma2 = 0, dihedral = 0;
};

/// Triangulated convex hull of the contacts together with the deterministic
/// parameterization chain and the scale anchor A = sqrt(total facet area).
struct GraspPolyhedron {
  std::vector<Vec3> points;
  std::vector<HullFacet> facets;  // single oriented triangle when n == 3
  std::array<int, 3> t1{};        // (v_a, v_b, v_c); d = |v_a v_b|
  Vec3 t1_normal;
  double t1_gamma1 = 0, t1_gamma2 = 0, t1_d = 0;
  std::vector<ChainStep> chain_steps;      // n - 3 entries
  std::vector<int> placement_order;        // canonical vertex order, size n
  double total_area = 0;
  double scale_anchor = 0;                 // A

  int chain_length() const { return 1 + static_cast<int>(chain_steps.size()); }

  /// The n-2 chain triangles t1..t_{n-2}.
  std::vector<std::array<int, 3>> chain_triangles() const {
    std::vector<std::array<int, 3>> tris = {t1};
    for (const auto& s : chain_steps) tris.push_back({s.edge[0], s.edge[1], s.apex});
    return tris;
  }
};

namespace detail {

/// Comparison key of a lone oriented triangle, used to resolve the
/// orientation ambiguity. Normal directions enter as frame dot products
/// rather than angles so the key has no wrap-around seam.
inline std::vector<double> single_triangle_key(const std::vector<Vec3>& pts,
                                               const std::vector<Vec3>& normals,
                                               const std::array<int, 3>& tri,
                                               const Vec3& w_hat) {
  std::vector<double> v = {
      angle_between(pts[tri[1]] - pts[tri[0]], pts[tri[2]] - pts[tri[0]]),
      angle_between(pts[tri[0]] - pts[tri[1]], pts[tri[2]] - pts[tri[1]]),
      distance(pts[tri[0]], pts[tri[1]])};
  if (!normals.empty()) {
    const Vec3 u_hat = (pts[tri[1]] - pts[tri[0]]).normalized();
    const Vec3 v_hat = w_hat.cross(u_hat);
    for (int k : tri) {
      v.push_back(normals[k].dot(u_hat));
      v.push_back(normals[k].dot(v_hat));
      v.push_back(normals[k].dot(w_hat));
    }
  }
  return v;
}

/// Pick the orientation and base edge of a lone triangle. Normals (when
/// given) vote via the mean-normal side first; remaining ties fall to a
/// tolerance-laddered lexicographic comparison of the two candidate
/// encodings, which is stable when the two sides are genuinely equivalent.
inline void orient_single_triangle(const std::vector<Vec3>& pts,
                                   const std::vector<Vec3>& normals,
                                   std::array<int, 3>& t1, Vec3& w_hat) {
  const auto ranks = subset_ranks(pts);
  // longest edge, ties by rank pair
  std::array<int, 2> base{0, 1};
  double best_len = -1;
  std::array<int, 2> best_rank{0, 0};
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double len = distance(pts[i], pts[j]);
      const std::array<int, 2> rp{std::min(ranks[i], ranks[j]),
                                  std::max(ranks[i], ranks[j])};
      const int c = cmp_tol(len, best_len);
      if (best_len < 0 || c > 0 || (c == 0 && rp < best_rank)) {
        base = {i, j};
        best_len = len;
        best_rank = rp;
      }
    }
  const int third = 3 - base[0] - base[1];
  const Vec3 plane_n =
      (pts[base[1]] - pts[base[0]]).cross(pts[third] - pts[base[0]]).normalized();

  auto arrange = [&](const Vec3& w) -> std::array<int, 3> {
    // direct the base edge so the third vertex is left of v_a -> v_b under w
    const Vec3 cr = (pts[base[1]] - pts[base[0]]).cross(pts[third] - pts[base[0]]);
    if (cr.dot(w) > 0) return {base[0], base[1], third};
    return {base[1], base[0], third};
  };

  if (!normals.empty()) {
    Vec3 mean{0, 0, 0};
    for (const auto& nn : normals) mean += nn;
    mean = mean / 3.0;
    const double s = mean.dot(plane_n);
    if (s > 1e-9) {
      w_hat = plane_n;
      t1 = arrange(w_hat);
      return;
    }
    if (s < -1e-9) {
      w_hat = -plane_n;
      t1 = arrange(w_hat);
      return;
    }
  }
  const auto tri_a = arrange(plane_n);
  const auto tri_b = arrange(-plane_n);
  const auto va = single_triangle_key(pts, normals, tri_a, plane_n);
  const auto vb = single_triangle_key(pts, normals, tri_b, -plane_n);
  int cmp = 0;
  for (size_t i = 0; i < va.size() && cmp == 0; ++i) cmp = cmp_key(va[i], vb[i]);
  w_hat = cmp >= 0 ? plane_n : -plane_n;
  t1 = arrange(w_hat);
}

/// Forward-side choice of which vertex the next chain triangle introduces.
/// Prefers the actual hull facet across the attachment edge so convex inputs
/// keep interior fold angles; reconstruction never needs this rule.
inline int choose_apex(const std::vector<Vec3>& pts, const SmallHull& full_hull,
                       const std::vector<char>& placed_mask,
                       const std::vector<int>& full_ranks, const Hinge& hinge,
                       int ga, int gb) {
  int best = -1;
  double best_theta = -10;
  double best_area = -1;
  for (const auto& f : full_hull.facets) {
    bool has_a = false, has_b = false;
    int third = -1;
    for (int v : f.v) {
      if (v == ga) has_a = true;
      else if (v == gb) has_b = true;
      else third = v;
    }
    if (!has_a || !has_b || third < 0 || placed_mask[third]) continue;
    double g1, g2, th;
    hinge_angles(hinge, pts[third], g1, g2, th);
    bool better;
    if (best < 0)
      better = true;
    else if ((th > 0) != (best_theta > 0))
      better = th > 0;  // prefer interior folds
    else
      better = f.area > best_area;
    if (better) {
      best = third;
      best_theta = th;
      best_area = f.area;
    }
  }
  if (best >= 0) return best;

  // fallback: nearest unplaced vertex to the edge midpoint, ties by rank
  const Vec3 mid = (hinge.a + hinge.b) * 0.5;
  double best_d = 0;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (placed_mask[i]) continue;
    const double d = distance(pts[i], mid);
    if (best < 0 || cmp_tol(d, best_d) < 0 ||
        (cmp_tol(d, best_d) == 0 && full_ranks[i] < full_ranks[best])) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

}  // namespace detail

/// Build the grasp polyhedron: triangulated convex hull (all n points must be
/// hull vertices), the chain t1..t_{n-2}, facet areas and the scale anchor.
/// Normals, when supplied, only break the n == 3 orientation ambiguity.
inline GraspPolyhedron build_polyhedron(const std::vector<Vec3>& points,
                                        const std::vector<Vec3>& normals = {}) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw DegenerateGrasp("polyhedron needs at least 3 points");

  GraspPolyhedron poly;
  poly.points = points;

  const auto full_ranks = detail::subset_ranks(points);

  if (n == 3) {
    Grasp probe{points, {}, Dimensionality::spatial};
    if (!grasp_spans_space(probe)) throw DegenerateGrasp("collinear contacts");
    detail::orient_single_triangle(points, normals, poly.t1, poly.t1_normal);
    HullFacet f;
    f.v = poly.t1;
    f.normal = poly.t1_normal;
    f.area = triangle_area(points[0], points[1], points[2]);
    f.patch = 0;
    poly.facets = {f};
    poly.total_area = f.area;
  } else {
    Grasp probe{points, {}, Dimensionality::spatial};
    if (!grasp_spans_space(probe)) throw DegenerateGrasp("contacts do not span 3D");
    SmallHullOptions opt;
    opt.vertex_rank = &full_ranks;
    const SmallHull hull = small_convex_hull(points, opt);
    if (hull.status != SmallHull::Status::ok)
      throw DegenerateGrasp("contacts do not span 3D");
    if (!hull.all_points_are_vertices())
      throw DegenerateGrasp("a contact lies inside the hull of the others");
    poly.total_area = hull.total_area;

    // t1 = ladder-best facet
    std::vector<detail::PatchMetrics> fm(hull.facets.size());
    for (size_t i = 0; i < hull.facets.size(); ++i) {
      const auto& f = hull.facets[i];
      fm[i].area = f.area;
      for (int e = 0; e < 3; ++e) {
        const double len = distance(points[f.v[e]], points[f.v[(e + 1) % 3]]);
        fm[i].perimeter += len;
        fm[i].edges_desc.push_back(len);
        fm[i].ranks_asc.push_back(full_ranks[f.v[e]]);
      }
      std::sort(fm[i].edges_desc.rbegin(), fm[i].edges_desc.rend());
      std::sort(fm[i].ranks_asc.begin(), fm[i].ranks_asc.end());
    }
    size_t best = 0;
    for (size_t i = 1; i < hull.facets.size(); ++i)
      if (detail::metrics_precede(fm[i], fm[best])) best = i;
    const HullFacet& t1f = hull.facets[best];

    // longest directed edge of t1 in CCW order
    int be = 0;
    double best_len = -1;
    std::array<int, 2> best_rank{0, 0};
    for (int e = 0; e < 3; ++e) {
      const int u = t1f.v[e], v = t1f.v[(e + 1) % 3];
      const double len = distance(points[u], points[v]);
      const std::array<int, 2> rp{std::min(full_ranks[u], full_ranks[v]),
                                  std::max(full_ranks[u], full_ranks[v])};
      const int c = detail::cmp_tol(len, best_len);
      if (best_len < 0 || c > 0 || (c == 0 && rp < best_rank)) {
        be = e;
        best_len = len;
        best_rank = rp;
      }
    }
    poly.t1 = {t1f.v[be], t1f.v[(be + 1) % 3], t1f.v[(be + 2) % 3]};
    poly.t1_normal = t1f.normal;
    poly.facets = hull.facets;

    // grow the chain
    std::vector<Vec3> placed = {points[poly.t1[0]], points[poly.t1[1]],
                                points[poly.t1[2]]};
    poly.placement_order = {poly.t1[0], poly.t1[1], poly.t1[2]};
    std::vector<char> placed_mask(n, 0);
    for (int v : poly.placement_order) placed_mask[v] = 1;

    while (static_cast<int>(poly.placement_order.size()) < n) {
      const auto att = detail::select_attachment(placed, poly.t1_normal);
      const int ga = poly.placement_order[att.va];
      const int gb = poly.placement_order[att.vb];
      const auto hinge = detail::make_hinge(points[ga], points[gb], att.parent_normal);
      const int apex = detail::choose_apex(points, hull, placed_mask,
                                           full_ranks, hinge, ga, gb);
      ChainStep step;
      step.edge = {ga, gb};
      step.apex = apex;
      step.parent_normal = att.parent_normal;
      detail::hinge_angles(hinge, points[apex], step.gamma1, step.gamma2,
                           step.dihedral);
      poly.chain_steps.push_back(step);
      placed.push_back(points[apex]);
      poly.placement_order.push_back(apex);
      placed_mask[apex] = 1;
    }
  }

  if (poly.placement_order.empty())
    poly.placement_order = {poly.t1[0], poly.t1[1], poly.t1[2]};
  poly.scale_anchor = std::sqrt(poly.total_area);
  poly.t1_d = distance(points[poly.t1[0]], points[poly.t1[1]]);
  poly.t1_gamma1 = angle_between(points[poly.t1[1]] - points[poly.t1[0]],
                                 points[poly.t1[2]] - points[poly.t1[0]]);
  poly.t1_gamma2 = angle_between(points[poly.t1[0]] - points[poly.t1[1]],
                                 points[poly.t1[2]] - points[poly.t1[1]]);
  return poly;
}

// ---------------------------------------------------------------------------
// Parameterization maps
// ---------------------------------------------------------------------------

/// n == 2: the contact distance is the whole story.
inline ParamVector parameterize_two_finger(const Grasp& g) {
  if (g.fingers() != 2) throw Error("parameterize_two_finger needs n == 2");
  if (g.with_normals())
    throw Error("two-finger grasps exclude normals");
  const double d = distance(g.points[0], g.points[1]);
  if (d < 1e-12) throw DegenerateGrasp("coincident two-finger contacts");
  ParamVector v;
  v.values = {d};
  v.shape = {2, false, false, g.dimensionality};
  return v;
}

/// Spatial map: [gamma1, gamma2, d, (gamma1_j, gamma2_j, theta_j)...] plus,
/// with normals, (azimuth, elevation) per contact in the t1 frame, ordered by
/// the chain's placement order.
inline ParamVector parameterize_spatial(const Grasp& g) {
  validate_grasp(g);
  if (g.dimensionality != Dimensionality::spatial)
    throw ShapeMismatch("parameterize_spatial needs a spatial grasp");
  const int n = g.fingers();
  if (n == 2) return parameterize_two_finger(g);
  if (!grasp_spans_space(g)) throw DegenerateGrasp("degenerate spatial grasp");

  const GraspPolyhedron poly = build_polyhedron(g.points, g.normals);

  ParamVector v;
  v.shape = {n, g.with_normals(), false, Dimensionality::spatial};
  v.values = {poly.t1_gamma1, poly.t1_gamma2, poly.t1_d};
  for (const auto& s : poly.chain_steps) {
    v.values.push_back(s.gamma1);
    v.values.push_back(s.gamma2);
    v.values.push_back(s.dihedral);
  }
  if (g.with_normals()) {
    const Vec3 u_hat = (g.points[poly.t1[1]] - g.points[poly.t1[0]]).normalized();
    const Vec3 w_hat = poly.t1_normal;
    const Vec3 v_hat = w_hat.cross(u_hat);
    for (int k : poly.placement_order) {
      const Vec3& nn = g.normals[k];
      v.values.push_back(std::atan2(nn.dot(v_hat), nn.dot(u_hat)));
      v.values.push_back(std::asin(std::clamp(nn.dot(w_hat), -1.0, 1.0)));
    }
  }
  return v;
}

namespace detail {

/// CCW polygon order of 2D points in convex position; throws when collinear
/// or not in convex position.
inline std::vector<int> convex_polygon_order(const std::vector<Vec3>& pts) {
  const int n = static_cast<int>(pts.size());
  double scale = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) scale = std::max(scale, distance(pts[i], pts[j]));
  std::vector<Vec2> uv(n);
  for (int i = 0; i < n; ++i) uv[i] = {pts[i].x, pts[i].y};
  const auto hull = hull_2d_indices(uv, 1e-9 * scale * scale);
  if (hull.size() < 3) throw DegenerateGrasp("collinear planar contacts");
  if (static_cast<int>(hull.size()) < n)
    throw NonConvexUnsupported("planar contacts not in convex position");
  return hull;
}

}  // namespace detail

/// Planar map: [gamma_1..gamma_{n-1}, d_1..d_{n-2}] plus, with normals, the
/// signed angle from the CCW edge following each vertex. Vertex order runs
/// counter-clockwise from the longest edge; among tied longest edges the
/// ordering producing the lexicographically largest vector wins.
inline ParamVector parameterize_planar(const Grasp& g) {
  validate_grasp(g);
  if (g.dimensionality != Dimensionality::planar)
    throw ShapeMismatch("parameterize_planar needs a planar grasp");
  const int n = g.fingers();
  if (n == 2) return parameterize_two_finger(g);

  const auto ring = detail::convex_polygon_order(g.points);

  auto edge_len = [&](int i) {
    return distance(g.points[ring[i]], g.points[ring[(i + 1) % n]]);
  };
  double longest = 0;
  for (int i = 0; i < n; ++i) longest = std::max(longest, edge_len(i));

  auto emit = [&](int start) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = ring[(start + i) % n];
    ParamVector v;
    v.shape = {n, g.with_normals(), false, Dimensionality::planar};
    auto at = [&](int i) { return g.points[order[(i % n + n) % n]]; };
    for (int k = 0; k < n - 1; ++k)
      v.values.push_back(angle_between(at(k + 1) - at(k), at(k - 1) - at(k)));
    for (int k = 0; k < n - 2; ++k) v.values.push_back(distance(at(k), at(k + 1)));
    if (g.with_normals())
      for (int k = 0; k < n; ++k) {
        const Vec3 e = at(k + 1) - at(k);
        const Vec3& nn = g.normals[order[k]];
        const Vec2 e2{e.x, e.y}, n2{nn.x, nn.y};
        v.values.push_back(std::atan2(e2.cross(n2), e2.dot(n2)));
      }
    return v;
  };

  ParamVector best;
  for (int i = 0; i < n; ++i) {
    if (!near_equal(edge_len(i), longest) && edge_len(i) < longest) continue;
    ParamVector cand = emit(i);
    if (best.values.empty() || cand.values > best.values) best = std::move(cand);
  }
  return best;
}

/// The map Phi_n, dispatching on dimensionality and finger count.
inline ParamVector parameterize(const Grasp& g) {
  if (g.fingers() == 2) return parameterize_two_finger(g);
  return g.dimensionality == Dimensionality::spatial ? parameterize_spatial(g)
                                                     : parameterize_planar(g);
}

/// Parameterize and scale-normalize in one go (n >= 3).
inline ParamVector parameterize_normalized(const Grasp& g) {
  if (g.dimensionality == Dimensionality::spatial) {
    ParamVector v = parameterize_spatial(g);
    const GraspPolyhedron poly = build_polyhedron(g.points, g.normals);
    return normalize_scale(v, poly.scale_anchor);
  }
  ParamVector v = parameterize_planar(g);
  const auto ring = detail::convex_polygon_order(g.points);
  double twice_area = 0;
  for (size_t i = 0; i < ring.size(); ++i) {
    const Vec3& a = g.points[ring[i]];
    const Vec3& b = g.points[ring[(i + 1) % ring.size()]];
    twice_area += a.x * b.y - b.x * a.y;
  }
  return normalize_scale(v, std::sqrt(std::fabs(twice_area) / 2.0));
}

// ---------------------------------------------------------------------------
// Reconstruction (inverse map, canonical frame)
// ---------------------------------------------------------------------------

namespace detail {

inline void check_interior(double a) {
  if (!(a > 0 && a < kPi)) throw InfeasibleVector("interior angle out of (0, pi)");
}

}  // namespace detail

/// Rebuild contact points (and normals) in a canonical frame: t1 in the
/// xy-plane with outward normal +z, d along +x, first vertex at the origin.
/// Inverse of parameterize on its image; throws InfeasibleVector otherwise.
inline Grasp reconstruct(const ParamVector& v) {
  const int n = v.shape.fingers;
  if (v.dimension() != param_dimension(n, v.shape.with_normals, v.shape.dimensionality))
    throw ShapeMismatch("vector length disagrees with its metadata");
  if (v.shape.normalized)
    throw NotApplicable("reconstruct expects an unnormalized vector (lengths in mesh units)");

  Grasp g;
  g.dimensionality = v.shape.dimensionality;

  if (n == 2) {
    const double d = v.values[0];
    if (!(d > 0)) throw InfeasibleVector("nonpositive contact distance");
    g.points = {{0, 0, 0}, {d, 0, 0}};
    return g;
  }

  if (v.shape.dimensionality == Dimensionality::spatial) {
    const double g1 = v.values[0], g2 = v.values[1], d = v.values[2];
    detail::check_interior(g1);
    detail::check_interior(g2);
    if (!(g1 + g2 < kPi)) throw InfeasibleVector("t1 angles sum to >= pi");
    if (!(d > 0)) throw InfeasibleVector("nonpositive base edge");
    const double r = d * std::sin(g2) / std::sin(g1 + g2);
    std::vector<Vec3> pts = {{0, 0, 0},
                             {d, 0, 0},
                             {r * std::cos(g1), r * std::sin(g1), 0}};
    const Vec3 w_hat{0, 0, 1};
    int idx = 3;
    for (int j = 0; j < n - 3; ++j) {
      const auto att = detail::select_attachment(pts, w_hat);
      const auto hinge =
          detail::make_hinge(pts[att.va], pts[att.vb], att.parent_normal);
      const double a1 = v.values[idx], a2 = v.values[idx + 1],
                   th = v.values[idx + 2];
      idx += 3;
      pts.push_back(detail::hinge_apex(hinge, a1, a2, th));
    }
    g.points = std::move(pts);
    if (v.shape.with_normals) {
      const Vec3 u_hat{1, 0, 0}, v_hat{0, 1, 0};
      for (int k = 0; k < n; ++k) {
        const double az = v.values[idx], el = v.values[idx + 1];
        idx += 2;
        if (!(az > -kPi - 1e-12 && az <= kPi + 1e-12) ||
            !(el >= -kPi / 2 - 1e-12 && el <= kPi / 2 + 1e-12))
          throw InfeasibleVector("normal angles out of range");
        g.normals.push_back(u_hat * (std::cos(el) * std::cos(az)) +
                            v_hat * (std::cos(el) * std::sin(az)) +
                            w_hat * std::sin(el));
      }
    }
    if (!grasp_spans_space(g)) throw InfeasibleVector("reconstructed points degenerate");
    if (n >= 4) {
      const auto ranks = detail::subset_ranks(g.points);
      SmallHullOptions opt;
      opt.vertex_rank = &ranks;
      const auto hull = small_convex_hull(g.points, opt);
      if (hull.status != SmallHull::Status::ok || !hull.all_points_are_vertices())
        throw InfeasibleVector("reconstructed points are not in convex position");
    }
    return g;
  }

  // planar
  const int na = n - 1, nd = n - 2;
  std::vector<double> gam(v.values.begin(), v.values.begin() + na);
  std::vector<double> dd(v.values.begin() + na, v.values.begin() + na + nd);
  for (double a : gam) detail::check_interior(a);
  for (double l : dd)
    if (!(l > 0)) throw InfeasibleVector("nonpositive edge length");

  std::vector<Vec3> pts = {{0, 0, 0}, {dd[0], 0, 0}};
  double heading = 0;
  for (int k = 1; k < n - 2; ++k) {
    heading += kPi - gam[k];  // exterior turn at vertex k (0-based)
    pts.push_back(pts.back() +
                  Vec3{dd[k] * std::cos(heading), dd[k] * std::sin(heading), 0});
  }
  // last vertex: ray from the last placed vertex meets the ray from the origin
  heading += kPi - gam[n - 2];
  const Vec2 a{std::cos(heading), std::sin(heading)};
  const Vec2 b{std::cos(gam[0]), std::sin(gam[0])};
  const Vec2 p{pts.back().x, pts.back().y};
  // p + t*a = s*b with t, s > 0
  const double denom = a.cross(b);
  if (std::fabs(denom) < 1e-14) throw InfeasibleVector("polygon does not close");
  const double t = -p.cross(b) / denom;
  const double s = -p.cross(a) / denom;
  if (!(t > 0) || !(s > 0)) throw InfeasibleVector("polygon does not close");
  pts.push_back({p.x + t * a.x, p.y + t * a.y, 0});

  g.points = std::move(pts);
  try {
    detail::convex_polygon_order(g.points);
  } catch (const Error&) {
    throw InfeasibleVector("reconstructed polygon not convex");
  }
  if (v.shape.with_normals) {
    int idx = na + nd;
    for (int k = 0; k < n; ++k) {
      const double th = v.values[idx++];
      const Vec3 e = g.points[(k + 1) % n] - g.points[k];
      const double base = std::atan2(e.y, e.x);
      g.normals.push_back({std::cos(base + th), std::sin(base + th), 0});
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// CSV row form: n,with_normals,normalized,dimensionality,q1..qw
// ---------------------------------------------------------------------------

inline std::string to_csv_row(const ParamVector& v) {
  std::string out = std::to_string(v.shape.fingers);
  out += v.shape.with_normals ? ",1" : ",0";
  out += v.shape.normalized ? ",1" : ",0";
  out += "," + to_string(v.shape.dimensionality);
  char buf[64];
  for (double x : v.values) {
    std::snprintf(buf, sizeof(buf), ",%.17g", x);
    out += buf;
  }
  return out;
}

inline ParamVector from_csv_row(const std::string& line) {
  std::istringstream in(line);
  std::string tok;
  auto next = [&]() {
    if (!std::getline(in, tok, ',')) throw ParseError("truncated vector row");
    return tok;
  };
  ParamVector v;
  v.shape.fingers = std::stoi(next());
  v.shape.with_normals = next() == "1";
  v.shape.normalized = next() == "1";
  v.shape.dimensionality = dimensionality_from_string(next());
  while (std::getline(in, tok, ',')) v.values.push_back(std::stod(tok));
  if (v.dimension() !=
      param_dimension(v.shape.fingers, v.shape.with_normals, v.shape.dimensionality))
    throw ParseError("vector row has wrong dimension");
  return v;
}

}  // namespace graspkit
