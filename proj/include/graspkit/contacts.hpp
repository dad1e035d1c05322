#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "graspkit/errors.hpp"
#include "graspkit/mesh.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

struct ContactCandidate {
  Vec3 point;
  Vec3 normal;  // unit, pointing into the object
};

/// The sampleable tuple set of an object: one (point, inward normal) pair per
/// mesh face, point at the triangle center.
struct ContactCandidateSet {
  std::vector<ContactCandidate> entries;
  std::string source_mesh;
  bool orientation_warning = false;  // inwardness resolved by the centroid rule

  size_t size() const { return entries.size(); }
};

/// Convert a mesh to contact candidates: triangle centroids with unit face
/// normals flipped inward. Unoriented meshes fall back to pointing each normal
/// against the direction from the mesh centroid to the face centroid, which is
/// correct for star-shaped objects; the result carries a warning flag.
inline ContactCandidateSet mesh_to_contacts(const TriangleMesh& m) {
  if (m.empty()) throw EmptyMesh("cannot build contacts from an empty mesh");
  ContactCandidateSet out;
  out.source_mesh = m.name;
  out.orientation_warning = !m.oriented;

  Vec3 mesh_centroid{0, 0, 0};
  for (const auto& v : m.vertices) mesh_centroid += v;
  mesh_centroid = mesh_centroid / static_cast<double>(m.vertices.size());
  Vec3 lo = m.vertices[0], hi = m.vertices[0];
  for (const auto& v : m.vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  const double diag = std::max(distance(lo, hi), 1e-300);

  out.entries.reserve(m.faces.size());
  for (const auto& f : m.faces) {
    const Vec3 a = m.vertices[f[0]], b = m.vertices[f[1]], c = m.vertices[f[2]];
    const Vec3 centroid = (a + b + c) / 3.0;
    Vec3 n = (b - a).cross(c - a).normalized();
    if (m.oriented) {
      n = -n;  // winding gives the outward normal
    } else {
      const double d = n.dot(centroid - mesh_centroid);
      if (std::fabs(d) <= 1e-9 * diag) {
        // face centroid sits on the mesh centroid: a lone triangle still has
        // its winding as an outward claim, anything else is ambiguous
        if (m.faces.size() != 1)
          throw OrientationUnknown("cannot resolve inward normal for face of '" +
                                   m.name + "'");
        n = -n;
      } else if (d > 0) {
        n = -n;
      }
    }
    out.entries.push_back({centroid, n});
  }
  return out;
}

/// Displace each contact point by i.i.d. zero-mean Gaussian noise per
/// coordinate; normals are untouched. Pure function of (set, sigma, rng seed).
inline ContactCandidateSet perturb_contacts(const ContactCandidateSet& set,
                                            double sigma, SplitMix64& rng) {
  if (sigma < 0) throw Error("perturb_contacts: sigma must be >= 0");
  ContactCandidateSet out = set;
  if (sigma == 0) return out;
  for (auto& e : out.entries) {
    e.point.x += sigma * rng.next_gaussian();
    e.point.y += sigma * rng.next_gaussian();
    e.point.z += sigma * rng.next_gaussian();
  }
  return out;
}

/// Uniformly scale contact locations about the origin (normals unchanged).
inline ContactCandidateSet scale_contacts(const ContactCandidateSet& set, double s) {
  if (s <= 0) throw InvalidDims("contact scale must be positive");
  ContactCandidateSet out = set;
  for (auto& e : out.entries) e.point = e.point * s;
  return out;
}

/// CSV export, header `px,py,pz,nx,ny,nz`, file order.
inline void write_contacts_csv(const ContactCandidateSet& set, std::ostream& out) {
  out << "px,py,pz,nx,ny,nz\n";
  char buf[256];
  for (const auto& e : set.entries) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  e.point.x, e.point.y, e.point.z, e.normal.x, e.normal.y,
                  e.normal.z);
    out << buf;
  }
}

}  // namespace graspkit
