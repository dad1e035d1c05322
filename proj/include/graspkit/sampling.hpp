#pragma once

#include <cstdint>
#include <thread>
#include <vector>

#include "graspkit/contacts.hpp"
#include "graspkit/dataset.hpp"
#include "graspkit/errors.hpp"
#include "graspkit/grasp.hpp"
#include "graspkit/param.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

/// True when the grasp can be parameterized: spans its space and, for n >= 4,
/// every contact is a hull vertex.
inline bool grasp_parameterizable(const Grasp& g) {
  if (!grasp_spans_space(g)) return false;
  if (g.dimensionality == Dimensionality::spatial && g.fingers() >= 4) {
    const auto hull = small_convex_hull(g.points);
    return hull.status == SmallHull::Status::ok && hull.all_points_are_vertices();
  }
  return true;
}

/// Draw n distinct contact tuples uniformly without replacement; degenerate
/// draws are retried up to `retry_budget` times.
inline Grasp sample_grasp(const ContactCandidateSet& contacts, int fingers,
                          bool with_normals, SplitMix64& rng,
                          int retry_budget = 100) {
  const std::uint64_t k = contacts.size();
  if (k < static_cast<std::uint64_t>(fingers))
    throw TooFewCandidates("object offers fewer candidates than fingers");
  for (int attempt = 0; attempt <= retry_budget; ++attempt) {
    Grasp g;
    g.dimensionality = Dimensionality::spatial;
    std::vector<std::uint64_t> chosen;
    while (static_cast<int>(chosen.size()) < fingers) {
      const std::uint64_t idx = rng.next_below(k);
      bool dup = false;
      for (std::uint64_t c : chosen) dup |= (c == idx);
      if (dup) continue;
      chosen.push_back(idx);
      g.points.push_back(contacts.entries[idx].point);
      if (with_normals) g.normals.push_back(contacts.entries[idx].normal);
    }
    if (grasp_parameterizable(g)) return g;
  }
  throw PersistentDegeneracy("exceeded retry budget sampling a non-degenerate grasp");
}

// ---------------------------------------------------------------------------
// z-finger combinations
// ---------------------------------------------------------------------------

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 0; i < k; ++i) r = r * static_cast<std::uint64_t>(n - i) / (i + 1);
  return r;
}

inline Grasp subgrasp(const Grasp& g, const std::vector<int>& take) {
  Grasp s;
  s.dimensionality = g.dimensionality;
  for (int i : take) {
    s.points.push_back(g.points[i]);
    if (g.with_normals()) s.normals.push_back(g.normals[i]);
  }
  return s;
}

/// Lexicographic unranking of the z-subset with the given rank.
inline std::vector<int> combination_at(int n, int z, std::uint64_t rank) {
  std::vector<int> out;
  int next = 0;
  for (int slot = 0; slot < z; ++slot) {
    for (int v = next; v <= n - (z - slot); ++v) {
      const std::uint64_t block = binomial(n - v - 1, z - slot - 1);
      if (rank < block) {
        out.push_back(v);
        next = v + 1;
        break;
      }
      rank -= block;
    }
  }
  return out;
}

/// All C(n, z) z-finger sub-grasps in lexicographic order.
inline std::vector<Grasp> z_combinations(const Grasp& g, int z) {
  const int n = g.fingers();
  if (z < 3 || z > n) throw InvalidZ("z must lie in [3, n]");
  const std::uint64_t total = binomial(n, z);
  std::vector<Grasp> out;
  out.reserve(total);
  for (std::uint64_t r = 0; r < total; ++r)
    out.push_back(subgrasp(g, combination_at(n, z, r)));
  return out;
}

/// k distinct z-finger sub-grasps drawn uniformly without replacement.
inline std::vector<Grasp> sample_z_combinations(const Grasp& g, int z, int k,
                                                SplitMix64& rng) {
  const int n = g.fingers();
  if (z < 3 || z > n) throw InvalidZ("z must lie in [3, n]");
  const std::uint64_t total = binomial(n, z);
  if (k < 1 || static_cast<std::uint64_t>(k) > total)
    throw InvalidK("k must lie in [1, C(n, z)]");
  std::vector<std::uint64_t> ranks;
  while (static_cast<int>(ranks.size()) < k) {
    const std::uint64_t r = rng.next_below(total);
    bool dup = false;
    for (std::uint64_t c : ranks) dup |= (c == r);
    if (!dup) ranks.push_back(r);
  }
  std::vector<Grasp> out;
  for (std::uint64_t r : ranks) out.push_back(subgrasp(g, combination_at(n, z, r)));
  return out;
}

// ---------------------------------------------------------------------------
// Incomplete grasps
// ---------------------------------------------------------------------------

/// Discrete distribution over the number of fingers that make contact.
struct IncompleteGraspPolicy {
  std::vector<std::pair<int, double>> pmf;  // (z, probability)

  void validate(int max_fingers) const {
    double sum = 0;
    for (const auto& [z, p] : pmf) {
      if (z < 3 || z > max_fingers) throw Error("policy support must lie in [3, n]");
      if (p < 0) throw Error("policy probabilities must be nonnegative");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw Error("policy probabilities must sum to 1");
  }

  int draw(SplitMix64& rng) const {
    const double u = rng.next_double();
    double acc = 0;
    for (const auto& [z, p] : pmf) {
      acc += p;
      if (u < acc) return z;
    }
    return pmf.back().first;
  }
};

/// Contact distributions for 4- and 5-finger hands with occasional missed
/// contacts (fewer than three contacts are never produced).
inline IncompleteGraspPolicy incomplete_policy_4() {
  return {{{3, 0.4}, {4, 0.6}}};
}
inline IncompleteGraspPolicy incomplete_policy_5() {
  return {{{3, 0.2}, {4, 0.3}, {5, 0.5}}};
}

inline Grasp sample_incomplete(const ContactCandidateSet& contacts,
                               const IncompleteGraspPolicy& policy, int max_fingers,
                               bool with_normals, SplitMix64& rng,
                               int retry_budget = 100) {
  policy.validate(max_fingers);
  const int z = policy.draw(rng);
  return sample_grasp(contacts, z, with_normals, rng, retry_budget);
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

struct DatasetOptions {
  int fingers = 4;
  int per_class = 1000;  // N
  bool with_normals = true;
  bool normalize = false;
  double sigma = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  int retry_budget = 100;
  std::uint64_t index_offset = 0;  // shifts the derived per-sample streams
};

namespace detail {

/// One sample, fully driven by its derived stream: draw, perturb, check,
/// retry, parameterize. Identical output for a global index regardless of
/// which worker runs it.
inline std::vector<double> generate_row(const ContactCandidateSet& contacts,
                                        const DatasetOptions& opt,
                                        std::uint64_t stream_seed) {
  SplitMix64 rng(stream_seed);
  const std::uint64_t k = contacts.size();
  for (int attempt = 0; attempt <= opt.retry_budget; ++attempt) {
    Grasp g;
    g.dimensionality = Dimensionality::spatial;
    std::vector<std::uint64_t> chosen;
    while (static_cast<int>(chosen.size()) < opt.fingers) {
      const std::uint64_t idx = rng.next_below(k);
      bool dup = false;
      for (std::uint64_t c : chosen) dup |= (c == idx);
      if (dup) continue;
      chosen.push_back(idx);
      g.points.push_back(contacts.entries[idx].point);
      if (opt.with_normals) g.normals.push_back(contacts.entries[idx].normal);
    }
    if (opt.sigma > 0)
      for (auto& p : g.points) {
        p.x += opt.sigma * rng.next_gaussian();
        p.y += opt.sigma * rng.next_gaussian();
        p.z += opt.sigma * rng.next_gaussian();
      }
    if (!grasp_parameterizable(g)) continue;
    const ParamVector q = opt.normalize ? parameterize_normalized(g) : parameterize(g);
    return q.values;
  }
  throw PersistentDegeneracy("exceeded retry budget in dataset generation");
}

}  // namespace detail

/// N labeled, parameterized grasps per object. Per-sample seeds are derived
/// from (seed, global index), so the output is byte-identical for any worker
/// count.
inline LabeledDataset generate_dataset(const std::vector<ContactCandidateSet>& objects,
                                       const std::vector<std::string>& names,
                                       const DatasetOptions& opt) {
  if (objects.empty()) throw Error("generate_dataset: no objects");
  if (names.size() != objects.size())
    throw Error("generate_dataset: name/object count mismatch");
  for (const auto& c : objects)
    if (c.size() < static_cast<size_t>(opt.fingers))
      throw TooFewCandidates("object '" + c.source_mesh + "' has too few candidates");

  LabeledDataset ds;
  ds.shape = {opt.fingers, opt.with_normals, opt.normalize, Dimensionality::spatial};
  ds.meta.class_names = names;
  ds.meta.sigma = opt.sigma;
  ds.meta.seed = opt.seed;
  ds.meta.per_class = opt.per_class;

  const size_t total = objects.size() * static_cast<size_t>(opt.per_class);
  ds.rows.assign(total, {});
  ds.labels.assign(total, 0);

  auto run_range = [&](size_t lo, size_t hi) {
    for (size_t g = lo; g < hi; ++g) {
      const int label = static_cast<int>(g / opt.per_class);
      ds.labels[g] = label;
      ds.rows[g] = detail::generate_row(
          objects[label], opt, SplitMix64::derive(opt.seed, opt.index_offset + g));
    }
  };

  const int workers = std::max(1, opt.workers);
  if (workers == 1 || total < 2) {
    run_range(0, total);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (total + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const size_t lo = std::min(total, w * chunk);
      const size_t hi = std::min(total, lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  return ds;
}

}  // namespace graspkit
