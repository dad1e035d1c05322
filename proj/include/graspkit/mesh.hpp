#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "graspkit/errors.hpp"
#include "graspkit/geometry.hpp"

namespace graspkit {

enum class MeshFormat { obj, stl, off };
enum class PrimitiveKind { box, sphere, cylinder };

/// Triangle mesh in length units. Faces are index triples; `oriented` is set
/// when the surface is closed and consistently wound (outward after load
/// normalization), which is what signed-volume computation requires.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::string name;
  bool oriented = false;

  bool empty() const { return faces.empty(); }
};

namespace detail {

inline double face_area(const TriangleMesh& m, const std::array<int, 3>& f) {
  return triangle_area(m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]]);
}

/// Drops out-of-range and degenerate faces (area <= 1e-12), checks for a
/// closed consistent winding, and flips an inward-wound closed mesh outward.
inline void finalize_mesh(TriangleMesh& m) {
  const int nv = static_cast<int>(m.vertices.size());
  std::vector<std::array<int, 3>> kept;
  kept.reserve(m.faces.size());
  for (const auto& f : m.faces) {
    if (f[0] < 0 || f[1] < 0 || f[2] < 0 || f[0] >= nv || f[1] >= nv || f[2] >= nv)
      throw ParseError("face index out of range in mesh '" + m.name + "'");
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
    if (face_area(m, f) <= 1e-12) continue;
    kept.push_back(f);
  }
  m.faces = std::move(kept);
  if (m.faces.empty()) throw EmptyMesh("mesh '" + m.name + "' has no valid faces");

  // closed + consistent: every directed edge used once, with its reverse present
  std::map<std::pair<int, int>, int> edges;
  bool consistent = true;
  for (const auto& f : m.faces)
    for (int e = 0; e < 3 && consistent; ++e) {
      auto key = std::make_pair(f[e], f[(e + 1) % 3]);
      if (++edges[key] > 1) consistent = false;
    }
  bool closed = consistent;
  if (consistent)
    for (const auto& [key, cnt] : edges)
      if (edges.find({key.second, key.first}) == edges.end()) {
        closed = false;
        break;
      }
  m.oriented = consistent && closed;

  if (m.oriented) {
    double six_v = 0;
    for (const auto& f : m.faces)
      six_v += m.vertices[f[0]].dot(m.vertices[f[1]].cross(m.vertices[f[2]]));
    if (six_v < 0)
      for (auto& f : m.faces) std::swap(f[1], f[2]);
  }
}

inline void fan_triangulate(const std::vector<int>& poly,
                            std::vector<std::array<int, 3>>& faces) {
  for (size_t i = 1; i + 1 < poly.size(); ++i)
    faces.push_back({poly[0], poly[static_cast<int>(i)], poly[i + 1]});
}

inline TriangleMesh parse_obj(std::istream& in, const std::string& name) {
  TriangleMesh m;
  m.name = name;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x >> p.y >> p.z)) throw ParseError("bad OBJ vertex: " + line);
      m.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) {
        const size_t slash = tok.find('/');
        int idx = 0;
        try {
          idx = std::stoi(slash == std::string::npos ? tok : tok.substr(0, slash));
        } catch (...) {
          throw ParseError("bad OBJ face token: " + tok);
        }
        if (idx < 0) idx = static_cast<int>(m.vertices.size()) + idx + 1;
        if (idx < 1) throw ParseError("bad OBJ face index: " + tok);
        poly.push_back(idx - 1);
      }
      if (poly.size() < 3) throw ParseError("OBJ face with <3 vertices");
      fan_triangulate(poly, m.faces);
    }
  }
  return m;
}

inline TriangleMesh parse_off(std::istream& in, const std::string& name) {
  TriangleMesh m;
  m.name = name;
  std::string header;
  if (!(in >> header) || header != "OFF") throw ParseError("missing OFF header");
  size_t nv = 0, nf = 0, ne = 0;
  if (!(in >> nv >> nf >> ne)) throw ParseError("bad OFF counts");
  m.vertices.resize(nv);
  for (auto& p : m.vertices)
    if (!(in >> p.x >> p.y >> p.z)) throw ParseError("bad OFF vertex");
  for (size_t f = 0; f < nf; ++f) {
    int k = 0;
    if (!(in >> k) || k < 3) throw ParseError("bad OFF face");
    std::vector<int> poly(k);
    for (int& idx : poly)
      if (!(in >> idx)) throw ParseError("bad OFF face index");
    fan_triangulate(poly, m.faces);
  }
  return m;
}

inline TriangleMesh parse_stl(const std::string& bytes, const std::string& name) {
  TriangleMesh m;
  m.name = name;
  // weld exactly-equal float32 corners so faces share vertices
  std::map<std::array<float, 3>, int> welded;
  auto add_vertex = [&](float x, float y, float z) {
    const std::array<float, 3> key{x, y, z};
    auto it = welded.find(key);
    if (it != welded.end()) return it->second;
    const int id = static_cast<int>(m.vertices.size());
    m.vertices.push_back({x, y, z});
    welded.emplace(key, id);
    return id;
  };

  bool binary = false;
  if (bytes.size() >= 84) {
    std::uint32_t ntri = 0;
    std::memcpy(&ntri, bytes.data() + 80, 4);
    if (bytes.size() == 84 + 50ull * ntri) binary = true;
  }

  if (binary) {
    std::uint32_t ntri = 0;
    std::memcpy(&ntri, bytes.data() + 80, 4);
    const char* p = bytes.data() + 84;
    for (std::uint32_t t = 0; t < ntri; ++t, p += 50) {
      float v[12];
      std::memcpy(v, p, 48);  // normal + 3 vertices
      std::array<int, 3> f;
      for (int c = 0; c < 3; ++c)
        f[c] = add_vertex(v[3 + 3 * c], v[4 + 3 * c], v[5 + 3 * c]);
      m.faces.push_back(f);
    }
    return m;
  }

  std::istringstream in(bytes);
  std::string tok;
  if (!(in >> tok) || tok != "solid") throw ParseError("not an STL stream");
  std::vector<int> tri;
  while (in >> tok) {
    if (tok == "vertex") {
      float x, y, z;
      if (!(in >> x >> y >> z)) throw ParseError("bad STL vertex");
      tri.push_back(add_vertex(x, y, z));
      if (tri.size() == 3) {
        m.faces.push_back({tri[0], tri[1], tri[2]});
        tri.clear();
      }
    }
  }
  if (!tri.empty()) throw ParseError("truncated STL facet");
  return m;
}

}  // namespace detail

/// Load a mesh from a byte stream in the declared format. Degenerate faces are
/// dropped; a closed consistently-wound mesh comes out outward-oriented.
inline TriangleMesh load_mesh(std::istream& in, MeshFormat format,
                              const std::string& name = "mesh") {
  TriangleMesh m;
  switch (format) {
    case MeshFormat::obj:
      m = detail::parse_obj(in, name);
      break;
    case MeshFormat::off:
      m = detail::parse_off(in, name);
      break;
    case MeshFormat::stl: {
      std::string bytes((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
      m = detail::parse_stl(bytes, name);
      break;
    }
  }
  detail::finalize_mesh(m);
  return m;
}

inline MeshFormat format_from_path(const std::string& path) {
  const size_t dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(c));
  if (ext == "obj") return MeshFormat::obj;
  if (ext == "stl") return MeshFormat::stl;
  if (ext == "off") return MeshFormat::off;
  throw ParseError("unrecognized mesh extension: " + path);
}

inline double mesh_surface_area(const TriangleMesh& m) {
  double a = 0;
  for (const auto& f : m.faces) a += detail::face_area(m, f);
  return a;
}

/// Signed-tetrahedra volume against the origin. Requires an oriented mesh.
inline double mesh_volume(const TriangleMesh& m) {
  if (!m.oriented) throw NotOriented("mesh '" + m.name + "' is not closed/oriented");
  double six_v = 0;
  for (const auto& f : m.faces)
    six_v += m.vertices[f[0]].dot(m.vertices[f[1]].cross(m.vertices[f[2]]));
  return six_v / 6.0;
}

inline TriangleMesh scale_mesh(const TriangleMesh& m, double sx, double sy, double sz) {
  if (sx <= 0 || sy <= 0 || sz <= 0) throw InvalidDims("scale factors must be positive");
  TriangleMesh out = m;
  for (auto& v : out.vertices) v = {v.x * sx, v.y * sy, v.z * sz};
  return out;
}

namespace detail {

/// Axis-aligned box; each face is a divisions x divisions quad grid, welded
/// along the cube edges.
inline TriangleMesh make_box(double lx, double ly, double lz, int divisions) {
  TriangleMesh m;
  m.name = "box";
  const double x = lx / 2, y = ly / 2, z = lz / 2;
  std::map<std::array<double, 3>, int> welded;
  auto vertex = [&](double px, double py, double pz) {
    const std::array<double, 3> key{px, py, pz};
    auto it = welded.find(key);
    if (it != welded.end()) return it->second;
    const int id = static_cast<int>(m.vertices.size());
    m.vertices.push_back({px, py, pz});
    welded.emplace(key, id);
    return id;
  };
  // each face: origin corner plus two spanning edges, wound outward
  const Vec3 faces[6][3] = {
      {{-x, -y, -z}, {0, 2 * y, 0}, {2 * x, 0, 0}},   // bottom (-z)
      {{-x, -y, z}, {2 * x, 0, 0}, {0, 2 * y, 0}},    // top (+z)
      {{-x, -y, -z}, {2 * x, 0, 0}, {0, 0, 2 * z}},   // front (-y)
      {{-x, y, -z}, {0, 0, 2 * z}, {2 * x, 0, 0}},    // back (+y)
      {{-x, -y, -z}, {0, 0, 2 * z}, {0, 2 * y, 0}},   // left (-x)
      {{x, -y, -z}, {0, 2 * y, 0}, {0, 0, 2 * z}},    // right (+x)
  };
  for (const auto& f : faces) {
    // direct fractional coordinates so shared-edge points weld exactly
    auto corner = [&](int i, int j) {
      const Vec3 p = f[0] + f[1] * (static_cast<double>(i) / divisions) +
                     f[2] * (static_cast<double>(j) / divisions);
      return vertex(p.x, p.y, p.z);
    };
    for (int i = 0; i < divisions; ++i)
      for (int j = 0; j < divisions; ++j) {
        const int a = corner(i, j), b = corner(i + 1, j);
        const int c = corner(i + 1, j + 1), d = corner(i, j + 1);
        m.faces.push_back({a, b, c});
        m.faces.push_back({a, c, d});
      }
  }
  return m;
}

inline TriangleMesh make_icosphere(double r, int subdivisions) {
  TriangleMesh m;
  m.name = "sphere";
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int id = static_cast<int>(m.vertices.size());
      m.vertices.push_back((m.vertices[a] + m.vertices[b]) * 0.5);
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.faces.size() * 4);
    for (const auto& f : m.faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  for (auto& v : m.vertices) v = v.normalized() * r;
  return m;
}

inline TriangleMesh make_cylinder(double r, double h, int segments) {
  TriangleMesh m;
  m.name = "cylinder";
  const double z = h / 2;
  m.vertices.push_back({0, 0, -z});  // 0: bottom center
  m.vertices.push_back({0, 0, z});   // 1: top center
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * kPi * i / segments;
    m.vertices.push_back({r * std::cos(a), r * std::sin(a), -z});
  }
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * kPi * i / segments;
    m.vertices.push_back({r * std::cos(a), r * std::sin(a), z});
  }
  auto bot = [&](int i) { return 2 + (i % segments); };
  auto top = [&](int i) { return 2 + segments + (i % segments); };
  for (int i = 0; i < segments; ++i) {
    m.faces.push_back({bot(i), bot(i + 1), top(i + 1)});
    m.faces.push_back({bot(i), top(i + 1), top(i)});
    m.faces.push_back({0, bot(i + 1), bot(i)});
    m.faces.push_back({1, top(i), top(i + 1)});
  }
  return m;
}

}  // namespace detail

/// Closed, outward-oriented primitive meshes.
/// Dims: box = (lx, ly, lz); sphere = (r, -, -); cylinder = (r, h, -).
/// resolution: box = per-edge subdivisions (default 1, 12 faces),
/// sphere = icosphere subdivision level (default 3),
/// cylinder = segment count (default 64, minimum 8); 0 picks the default.
inline TriangleMesh generate_primitive(PrimitiveKind kind, const Vec3& dims,
                                       int resolution = 0) {
  TriangleMesh m;
  switch (kind) {
    case PrimitiveKind::box: {
      if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
        throw InvalidDims("box dims must be positive");
      const int div = resolution == 0 ? 1 : resolution;
      if (div < 1 || div > 64) throw InvalidDims("box subdivisions out of range");
      m = detail::make_box(dims.x, dims.y, dims.z, div);
      break;
    }
    case PrimitiveKind::sphere: {
      if (dims.x <= 0) throw InvalidDims("sphere radius must be positive");
      const int sub = resolution == 0 ? 3 : resolution;
      if (sub < 0 || sub > 7) throw InvalidDims("sphere subdivisions out of range");
      m = detail::make_icosphere(dims.x, sub);
      break;
    }
    case PrimitiveKind::cylinder: {
      if (dims.x <= 0 || dims.y <= 0)
        throw InvalidDims("cylinder radius/height must be positive");
      const int seg = resolution == 0 ? 64 : resolution;
      if (seg < 8) throw InvalidDims("cylinder needs at least 8 segments");
      m = detail::make_cylinder(dims.x, dims.y, seg);
      break;
    }
  }
  detail::finalize_mesh(m);
  return m;
}

inline void write_obj(const TriangleMesh& m, std::ostream& out) {
  char buf[128];
  for (const auto& v : m.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& f : m.faces)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

inline void write_off(const TriangleMesh& m, std::ostream& out) {
  out << "OFF\n" << m.vertices.size() << ' ' << m.faces.size() << " 0\n";
  char buf[128];
  for (const auto& v : m.vertices) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& f : m.faces)
    out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

}  // namespace graspkit
