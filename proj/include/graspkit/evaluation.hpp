#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "graspkit/mesh.hpp"
#include "graspkit/recognition.hpp"

namespace graspkit {

// ---------------------------------------------------------------------------
// Trial protocol
// ---------------------------------------------------------------------------

struct TrialConfig {
  Method method = Method::bc_np;
  double threshold = 0.85;
  int fingers = 4;            // physical grasp size sampled from the object
  int trials_per_object = 300;
  int max_physical = 100;
  double sigma = 0;           // query-side contact noise
  std::uint64_t seed = 0;
  int workers = 1;
  int z = 0;                  // 0 = plain; otherwise z-finger sub-grasp updates
  int combinations = 4;       // sub-grasps per physical grasp
  IcMode ic_mode = IcMode::argmax_only;
};

struct TrialRow {
  int object = 0;
  int trial = 0;
  bool converged = false;
  int physical = 0;
  int updates = 0;
  int predicted = -1;
  double certainty = 0;
};

struct TrialReport {
  std::vector<std::string> class_names;
  TrialConfig config;
  std::vector<TrialRow> rows;  // object-major, trial-minor

  // per-object aggregates (percent / counts)
  std::vector<double> success_strict;    // converged to the correct class
  std::vector<double> success_lenient;   // ... or budget-exhausted argmax correct
  std::vector<int> converged_count;
  std::vector<double> mean_samples_converged, std_samples_converged;
  std::vector<double> mean_samples_nonconverged, std_samples_nonconverged;
  std::vector<std::vector<double>> confusion;  // row-stochastic, rows = true class

  double overall_success_strict = 0;
  double overall_success_lenient = 0;
};

namespace detail {

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  if (xs.empty()) {
    mean = sd = 0;
    return;
  }
  mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  sd = std::sqrt(var / xs.size());
}

inline void aggregate_report(TrialReport& rep) {
  const int m = static_cast<int>(rep.class_names.size());
  const int t = rep.config.trials_per_object;
  rep.success_strict.assign(m, 0);
  rep.success_lenient.assign(m, 0);
  rep.converged_count.assign(m, 0);
  rep.mean_samples_converged.assign(m, 0);
  rep.std_samples_converged.assign(m, 0);
  rep.mean_samples_nonconverged.assign(m, 0);
  rep.std_samples_nonconverged.assign(m, 0);
  rep.confusion.assign(m, std::vector<double>(m, 0.0));
  for (int o = 0; o < m; ++o) {
    int strict = 0, lenient = 0;
    std::vector<double> conv_samples, nonconv_samples;
    for (int i = 0; i < t; ++i) {
      const TrialRow& r = rep.rows[o * t + i];
      const bool correct = r.predicted == o;
      if (r.converged) {
        ++rep.converged_count[o];
        conv_samples.push_back(r.physical);
        if (correct) ++strict;
      } else {
        nonconv_samples.push_back(r.physical);
      }
      if (correct) ++lenient;
      rep.confusion[o][r.predicted] += 1.0;
    }
    for (double& c : rep.confusion[o]) c /= t;
    rep.success_strict[o] = 100.0 * strict / t;
    rep.success_lenient[o] = 100.0 * lenient / t;
    mean_std(conv_samples, rep.mean_samples_converged[o], rep.std_samples_converged[o]);
    mean_std(nonconv_samples, rep.mean_samples_nonconverged[o],
             rep.std_samples_nonconverged[o]);
    rep.overall_success_strict += rep.success_strict[o] / m;
    rep.overall_success_lenient += rep.success_lenient[o] / m;
  }
}

/// One recognition trial against a single (possibly transformed) object.
inline RecognitionResult run_single(const ContactCandidateSet& contacts,
                                    const TrialConfig& cfg,
                                    const RecognizerModel& model,
                                    const ClassifierFn& aux,
                                    std::uint64_t trial_seed) {
  RunOptions opt;
  opt.threshold = cfg.threshold;
  opt.max_physical = cfg.max_physical;
  opt.ic_mode = cfg.ic_mode;
  ContactGraspSource source(contacts, cfg.fingers, model.shape.with_normals,
                            SplitMix64::derive(trial_seed, 1), cfg.sigma);
  SplitMix64 comb_rng(SplitMix64::derive(trial_seed, 2));
  try {
    if (cfg.z > 0) {
      if (cfg.method == Method::ic)
        return run_ic_z(source, model, cfg.z, cfg.combinations, comb_rng, opt);
      return run_bc_z(source, model, cfg.z, cfg.combinations, comb_rng,
                      cfg.method == Method::bc_ip ? PriorKind::initial
                                                  : PriorKind::naive,
                      aux, opt);
    }
    if (cfg.method == Method::ic) return run_ic(source, model, opt);
    return run_bc(source, model,
                  cfg.method == Method::bc_ip ? PriorKind::initial : PriorKind::naive,
                  aux, opt);
  } catch (const SamplerExhausted&) {
    RecognitionResult r;
    r.converged = false;
    return r;
  }
}

template <typename Fn>
inline void parallel_grid(size_t total, int workers, Fn&& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || total < 2) {
    for (size_t i = 0; i < total; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const size_t chunk = (total + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const size_t lo = std::min(total, w * chunk);
    const size_t hi = std::min(total, lo + chunk);
    if (lo < hi)
      pool.emplace_back([&fn, lo, hi]() {
        for (size_t i = lo; i < hi; ++i) fn(i);
      });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Fresh-session recognition trials per object; per-trial seeds are derived
/// from (seed, object, trial) so reports are reproducible at any worker count.
inline TrialReport run_trials(const std::vector<ContactCandidateSet>& objects,
                              const std::vector<std::string>& names,
                              const TrialConfig& cfg, const RecognizerModel& model,
                              const ClassifierFn& aux = {}) {
  if (objects.size() != names.size()) throw Error("run_trials: name/object mismatch");
  const int expected_fingers = cfg.z > 0 ? cfg.z : cfg.fingers;
  if (model.shape.fingers != expected_fingers)
    throw MetadataMismatch("model finger count does not fit the trial setup");
  if (cfg.method == Method::bc_ip && !aux)
    throw Error("bc-ip needs an auxiliary classifier");

  TrialReport rep;
  rep.class_names = names;
  rep.config = cfg;
  const size_t total = objects.size() * static_cast<size_t>(cfg.trials_per_object);
  rep.rows.assign(total, {});

  detail::parallel_grid(total, cfg.workers, [&](size_t g) {
    const int object = static_cast<int>(g / cfg.trials_per_object);
    const int trial = static_cast<int>(g % cfg.trials_per_object);
    const auto res = detail::run_single(objects[object], cfg, model, aux,
                                        SplitMix64::derive(cfg.seed, g));
    rep.rows[g] = {object,       trial,         res.converged, res.physical_grasps,
                   res.updates,  res.predicted, res.certainty};
  });
  detail::aggregate_report(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Success vs forced sample count
// ---------------------------------------------------------------------------

struct SuccessCurve {
  std::vector<double> success_at_k;                // percent, index k-1
  std::vector<std::vector<double>> per_object;     // [object][k-1]
};

/// Ignore the convergence threshold and read the running prediction out after
/// exactly k physical grasps, for k = 1..max_k.
inline SuccessCurve success_vs_samples(const std::vector<ContactCandidateSet>& objects,
                                       [[maybe_unused]] const std::vector<std::string>& names,
                                       TrialConfig cfg, const RecognizerModel& model,
                                       int max_k, const ClassifierFn& aux = {}) {
  cfg.threshold = 2.0;  // unreachable
  cfg.max_physical = max_k;
  const int m = static_cast<int>(objects.size());
  const size_t total = static_cast<size_t>(m) * cfg.trials_per_object;
  std::vector<std::vector<int>> hits(m, std::vector<int>(max_k, 0));

  std::vector<std::vector<int>> trial_pred(total);
  detail::parallel_grid(total, cfg.workers, [&](size_t g) {
    const auto res = detail::run_single(objects[g / cfg.trials_per_object], cfg, model,
                                        aux, SplitMix64::derive(cfg.seed, g));
    std::vector<int> pred_at_k(max_k, -1);
    int chosen = -1;
    size_t ti = 0;
    for (int k = 1; k <= max_k; ++k) {
      while (ti < res.trace.size() && res.trace[ti].physical <= k)
        chosen = res.trace[ti++].chosen;
      pred_at_k[k - 1] = chosen;
    }
    trial_pred[g] = std::move(pred_at_k);
  });
  for (size_t g = 0; g < total; ++g) {
    const int object = static_cast<int>(g / cfg.trials_per_object);
    for (int k = 0; k < max_k; ++k)
      if (trial_pred[g][k] == object) ++hits[object][k];
  }

  SuccessCurve curve;
  curve.per_object.assign(m, std::vector<double>(max_k, 0));
  curve.success_at_k.assign(max_k, 0);
  for (int o = 0; o < m; ++o)
    for (int k = 0; k < max_k; ++k) {
      curve.per_object[o][k] = 100.0 * hits[o][k] / cfg.trials_per_object;
      curve.success_at_k[k] += curve.per_object[o][k] / m;
    }
  return curve;
}

// ---------------------------------------------------------------------------
// Training-set size ablation
// ---------------------------------------------------------------------------

struct AblationPoint {
  double fraction = 0;
  double success_lenient = 0;  // overall percent
  double mean_samples = 0;     // over converged trials, all objects pooled
};

/// Deterministic per-class subset of the dataset (first ceil(f * count) of a
/// seed-keyed shuffle).
inline LabeledDataset dataset_fraction(const LabeledDataset& ds, double fraction) {
  if (!(fraction > 0 && fraction <= 1)) throw Error("fraction must be in (0, 1]");
  LabeledDataset out;
  out.shape = ds.shape;
  out.meta = ds.meta;
  for (int c = 0; c < ds.classes(); ++c) {
    auto idx = ds.indices_of_class(c);
    if (idx.empty()) throw EmptyClass("class without samples in ablation");
    SplitMix64 rng(SplitMix64::derive(ds.meta.seed, 0xAB1A0000ULL + c));
    for (size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.next_below(i)]);
    const size_t keep = static_cast<size_t>(
        std::ceil(fraction * static_cast<double>(idx.size())));
    if (keep == 0) throw EmptyClass("fraction leaves a class empty");
    for (size_t i = 0; i < keep; ++i) {
      out.rows.push_back(ds.rows[idx[i]]);
      out.labels.push_back(ds.labels[idx[i]]);
    }
  }
  return out;
}

inline std::vector<AblationPoint> data_ablation(
    const std::vector<double>& fractions, const LabeledDataset& full,
    const std::vector<ContactCandidateSet>& objects,
    const std::vector<std::string>& names, const TrialConfig& cfg,
    const std::function<RecognizerModel(const LabeledDataset&)>& retrain) {
  std::vector<AblationPoint> out;
  for (double f : fractions) {
    const LabeledDataset sub = f >= 1.0 ? full : dataset_fraction(full, f);
    const RecognizerModel model = retrain(sub);
    const TrialReport rep = run_trials(objects, names, cfg, model);
    AblationPoint pt;
    pt.fraction = f;
    pt.success_lenient = rep.overall_success_lenient;
    double sum = 0;
    int cnt = 0;
    for (const auto& r : rep.rows)
      if (r.converged) {
        sum += r.physical;
        ++cnt;
      }
    pt.mean_samples = cnt ? sum / cnt : 0;
    out.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaled-object trials
// ---------------------------------------------------------------------------

/// Per-trial uniform scale in [lo, hi] applied to the query object's contact
/// locations; requires a scale-normalized model.
inline TrialReport scaled_object_trials(const std::vector<ContactCandidateSet>& objects,
                                        const std::vector<std::string>& names,
                                        const TrialConfig& cfg,
                                        const RecognizerModel& model, double scale_lo,
                                        double scale_hi,
                                        const ClassifierFn& aux = {}) {
  if (!model.shape.normalized)
    throw NotNormalizedModel("scaled trials need a scale-normalized model");
  if (!(scale_lo > 0 && scale_hi >= scale_lo)) throw Error("bad scale range");
  if (cfg.method == Method::bc_ip && !aux)
    throw Error("bc-ip needs an auxiliary classifier");

  TrialReport rep;
  rep.class_names = names;
  rep.config = cfg;
  const size_t total = objects.size() * static_cast<size_t>(cfg.trials_per_object);
  rep.rows.assign(total, {});
  detail::parallel_grid(total, cfg.workers, [&](size_t g) {
    const int object = static_cast<int>(g / cfg.trials_per_object);
    const int trial = static_cast<int>(g % cfg.trials_per_object);
    const std::uint64_t trial_seed = SplitMix64::derive(cfg.seed, g);
    SplitMix64 scale_rng(SplitMix64::derive(trial_seed, 3));
    const double s = scale_rng.next_in(scale_lo, scale_hi);
    const auto res = detail::run_single(scale_contacts(objects[object], s), cfg,
                                        model, aux, trial_seed);
    rep.rows[g] = {object,      trial,         res.converged, res.physical_grasps,
                   res.updates, res.predicted, res.certainty};
  });
  detail::aggregate_report(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Geometry (primitive family) recognition
// ---------------------------------------------------------------------------

struct GeometryOptions {
  int variations = 100;           // resized copies per family
  double resize_lo = 0.5, resize_hi = 1.5;
  DatasetOptions dataset;         // normalize is forced on
};

/// Per-family variation sets: the base primitive non-uniformly resized along
/// the axes; contacts are regenerated from the resized mesh so the normals
/// stay exact.
inline std::vector<std::vector<ContactCandidateSet>> geometry_variations(
    const std::vector<TriangleMesh>& bases, const GeometryOptions& opt) {
  std::vector<std::vector<ContactCandidateSet>> out(bases.size());
  for (size_t f = 0; f < bases.size(); ++f) {
    for (int v = 0; v < opt.variations; ++v) {
      SplitMix64 rng(SplitMix64::derive(opt.dataset.seed,
                                        0x6E0 + f * opt.variations + v));
      const double sx = rng.next_in(opt.resize_lo, opt.resize_hi);
      const double sy = rng.next_in(opt.resize_lo, opt.resize_hi);
      const double sz = rng.next_in(opt.resize_lo, opt.resize_hi);
      out[f].push_back(mesh_to_contacts(scale_mesh(bases[f], sx, sy, sz)));
    }
  }
  return out;
}

/// Pooled, scale-normalized training set over all variations of each family.
inline LabeledDataset geometry_training_set(
    const std::vector<std::vector<ContactCandidateSet>>& families,
    const std::vector<std::string>& names, GeometryOptions opt) {
  opt.dataset.normalize = true;
  LabeledDataset ds;
  ds.shape = {opt.dataset.fingers, opt.dataset.with_normals, true,
              Dimensionality::spatial};
  ds.meta.class_names = names;
  ds.meta.sigma = opt.dataset.sigma;
  ds.meta.seed = opt.dataset.seed;
  ds.meta.per_class = opt.dataset.per_class;
  const size_t total = families.size() * static_cast<size_t>(opt.dataset.per_class);
  ds.rows.assign(total, {});
  ds.labels.assign(total, 0);
  detail::parallel_grid(total, opt.dataset.workers, [&](size_t g) {
    const int label = static_cast<int>(g / opt.dataset.per_class);
    SplitMix64 pick(SplitMix64::derive(opt.dataset.seed, 0xFA000000ULL + g));
    const auto& variation =
        families[label][pick.next_below(families[label].size())];
    ds.labels[g] = label;
    ds.rows[g] = detail::generate_row(variation, opt.dataset,
                                      SplitMix64::derive(opt.dataset.seed, g));
  });
  return ds;
}

struct GeometryQueryResult {
  std::string name;
  std::vector<double> rate;  // percent classified into each family
};

/// Classify query meshes into primitive families over repeated trials.
inline std::vector<GeometryQueryResult> geometry_recognition(
    const std::vector<TriangleMesh>& queries, const RecognizerModel& model,
    const std::vector<std::string>& family_names, const TrialConfig& cfg) {
  if (!model.shape.normalized)
    throw NotNormalizedModel("geometry recognition needs a scale-normalized model");
  std::vector<GeometryQueryResult> out;
  const int m = static_cast<int>(family_names.size());
  for (size_t qi = 0; qi < queries.size(); ++qi) {
    const auto contacts = mesh_to_contacts(queries[qi]);
    GeometryQueryResult res;
    res.name = queries[qi].name;
    res.rate.assign(m, 0.0);
    for (int t = 0; t < cfg.trials_per_object; ++t) {
      const std::uint64_t trial_seed =
          SplitMix64::derive(cfg.seed, 0x9E0000ULL + qi * cfg.trials_per_object + t);
      const auto r = detail::run_single(contacts, cfg, model, {}, trial_seed);
      if (r.predicted >= 0 && r.predicted < m) res.rate[r.predicted] += 1.0;
    }
    for (double& v : res.rate) v = 100.0 * v / cfg.trials_per_object;
    out.push_back(std::move(res));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Heterogeneous (incomplete-grasp) trials
// ---------------------------------------------------------------------------

/// Trials where finger count varies per grasp under the policy; every grasp
/// is routed to its z-matching model.
inline TrialReport run_policy_trials(const std::vector<ContactCandidateSet>& objects,
                                     const std::vector<std::string>& names,
                                     const TrialConfig& cfg,
                                     const std::map<int, RecognizerModel>& models,
                                     const IncompleteGraspPolicy& policy) {
  policy.validate(cfg.fingers);
  bool with_normals = false;
  for (const auto& [z, m] : models) with_normals = m.shape.with_normals;

  TrialReport rep;
  rep.class_names = names;
  rep.config = cfg;
  const size_t total = objects.size() * static_cast<size_t>(cfg.trials_per_object);
  rep.rows.assign(total, {});
  detail::parallel_grid(total, cfg.workers, [&](size_t g) {
    const int object = static_cast<int>(g / cfg.trials_per_object);
    const int trial = static_cast<int>(g % cfg.trials_per_object);
    const std::uint64_t trial_seed = SplitMix64::derive(cfg.seed, g);
    PolicyGraspSource source(objects[object], policy, cfg.fingers, with_normals,
                             SplitMix64::derive(trial_seed, 1));
    RunOptions opt;
    opt.threshold = cfg.threshold;
    opt.max_physical = cfg.max_physical;
    opt.ic_mode = cfg.ic_mode;
    const auto res = run_heterogeneous(
        source, models, cfg.method == Method::ic ? Method::ic : Method::bc_np, opt);
    rep.rows[g] = {object,      trial,         res.converged, res.physical_grasps,
                   res.updates, res.predicted, res.certainty};
  });
  detail::aggregate_report(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Grasp quality
// ---------------------------------------------------------------------------

struct GraspQuality {
  double volume_ratio = 0;      // contact polyhedron volume / object volume
  double mean_normal_angle = 0; // circular mean of pairwise normal angles
};

inline GraspQuality grasp_quality(const Grasp& g, const TriangleMesh& object) {
  GraspQuality q;
  const double obj_volume = mesh_volume(object);  // NotOriented propagates
  const int n = g.fingers();
  if (n < 3) throw DegenerateGrasp("quality needs at least 3 contacts");
  if (!grasp_spans_space(g)) throw DegenerateGrasp("degenerate grasp");
  if (n >= 4) {
    const auto hull = small_convex_hull(g.points);
    if (hull.status != SmallHull::Status::ok)
      throw DegenerateGrasp("contacts do not span 3D");
    q.volume_ratio = facets_volume(hull.facets, g.points) / obj_volume;
  } else {
    q.volume_ratio = 0;  // a triangle encloses no volume
  }
  if (g.with_normals()) {
    double ssin = 0, scos = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double a = std::acos(std::clamp(g.normals[i].dot(g.normals[j]), -1.0, 1.0));
        ssin += std::sin(a);
        scos += std::cos(a);
      }
    q.mean_normal_angle = std::atan2(ssin, scos);
  }
  return q;
}

/// Sample (volume ratio, classifier certainty on the true class) pairs from
/// one object, the raw material of the quality-vs-certainty analysis. `sigma`
/// adds measurement noise to the sampled contact locations.
inline void quality_certainty_pairs(const ContactCandidateSet& contacts,
                                    const TriangleMesh& object, int true_class,
                                    const RecognizerModel& model, int count,
                                    std::uint64_t seed,
                                    std::vector<double>& quality,
                                    std::vector<double>& certainty,
                                    double sigma = 0) {
  ContactGraspSource source(contacts, model.shape.fingers, model.shape.with_normals,
                            seed, sigma);
  for (int i = 0; i < count; ++i) {
    const Grasp g = source.next();
    const GraspQuality q = grasp_quality(g, object);
    const auto out = model.predict(parameterize_for(model.shape, g));
    quality.push_back(q.volume_ratio);
    certainty.push_back(out.probs[true_class]);
  }
}

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

struct SpearmanResult {
  double rho = 0;
  double z = 0;             // rho * sqrt(N - 1)
  double p_one_sided = 1;   // for H1: rho > 0
  bool positive_at_95 = false;
};

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  const size_t n = xs.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return xs[a] < xs[b]; });
  std::vector<double> rank(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (size_t t = i; t <= j; ++t) rank[order[t]] = avg;
    i = j + 1;
  }
  return rank;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace detail

/// Spearman rank correlation with a normal-approximation significance test
/// (valid at the >= 100 pair sizes this is used for).
inline SpearmanResult quality_correlation(const std::vector<double>& quality,
                                          const std::vector<double>& certainty) {
  if (quality.size() != certainty.size() || quality.size() < 100)
    throw Error("quality_correlation needs >= 100 paired observations");
  const auto ra = detail::average_ranks(quality);
  const auto rb = detail::average_ranks(certainty);
  const size_t n = ra.size();
  double ma = 0, mb = 0;
  for (size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < n; ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va <= 0 || vb <= 0)
    throw DegenerateVariance("constant ranks in correlation input");
  SpearmanResult r;
  r.rho = cov / std::sqrt(va * vb);
  r.z = r.rho * std::sqrt(static_cast<double>(n - 1));
  r.p_one_sided = 1.0 - detail::normal_cdf(r.z);
  r.positive_at_95 = r.z > 1.6448536269514722;
  return r;
}

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

inline void write_report_json(const TrialReport& rep, std::ostream& out) {
  nlohmann::json j;
  j["classes"] = rep.class_names;
  j["method"] = to_string(rep.config.method);
  j["threshold"] = rep.config.threshold;
  j["fingers"] = rep.config.fingers;
  j["z"] = rep.config.z;
  j["trials_per_object"] = rep.config.trials_per_object;
  j["seed"] = rep.config.seed;
  j["sigma"] = rep.config.sigma;
  j["success_strict"] = rep.success_strict;
  j["success_lenient"] = rep.success_lenient;
  j["overall_success_strict"] = rep.overall_success_strict;
  j["overall_success_lenient"] = rep.overall_success_lenient;
  j["converged_count"] = rep.converged_count;
  j["mean_samples_converged"] = rep.mean_samples_converged;
  j["std_samples_converged"] = rep.std_samples_converged;
  j["mean_samples_nonconverged"] = rep.mean_samples_nonconverged;
  j["std_samples_nonconverged"] = rep.std_samples_nonconverged;
  j["confusion"] = rep.confusion;
  out << j.dump(2) << "\n";
}

inline void write_trials_csv(const TrialReport& rep, std::ostream& out) {
  out << "object,trial,method,converged,samples,updates,predicted,correct\n";
  char buf[160];
  for (const auto& r : rep.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%s,%d,%d,%d,%s,%d\n",
                  rep.class_names[r.object].c_str(), r.trial,
                  to_string(rep.config.method).c_str(), r.converged ? 1 : 0,
                  r.physical, r.updates,
                  r.predicted >= 0 ? rep.class_names[r.predicted].c_str() : "-",
                  r.predicted == r.object ? 1 : 0);
    out << buf;
  }
}

inline void write_confusion_csv(const TrialReport& rep, std::ostream& out) {
  out << "true\\pred";
  for (const auto& c : rep.class_names) out << ',' << c;
  out << "\n";
  char buf[64];
  for (size_t i = 0; i < rep.confusion.size(); ++i) {
    out << rep.class_names[i];
    for (double v : rep.confusion[i]) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace graspkit
