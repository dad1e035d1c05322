#pragma once

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "graspkit/classify.hpp"
#include "graspkit/errors.hpp"
#include "graspkit/sampling.hpp"

#include "json.hpp"

namespace graspkit {

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

struct TraceRecord {
  int update = 0;    // 1-based classifier-update counter (0 = prior injection)
  int physical = 0;  // 1-based physical grasp counter
  int z = 0;         // fingers used by this update
  std::vector<double> probs;  // classifier output or normalized likelihoods
  std::vector<double> state;  // cumulative scores s, or posterior p
  int chosen = -1;
  double certainty = 0;
  bool converged = false;
  bool flagged = false;  // update skipped (vanished likelihoods / underflow)
};

struct StepResult {
  bool converged = false;
  int chosen = -1;
  double certainty = 0;
};

enum class IcMode { argmax_only, full_accumulate };

/// Iterative classification state: cumulative score vector s, threshold, and
/// the per-update trace.
struct IcSession {
  std::vector<double> scores;
  double threshold = 0.85;
  IcMode mode = IcMode::argmax_only;
  int updates = 0;
  std::vector<TraceRecord> trace;

  IcSession(int classes, double lambda_s, IcMode md = IcMode::argmax_only)
      : scores(classes, 0.0), threshold(lambda_s), mode(md) {}
};

/// One IC update: add the top probability to its class score (or the whole
/// distribution in full-accumulate mode). On the very first update the raw
/// top score stands in for the normalized one, so a single confident
/// prediction can converge immediately.
inline StepResult ic_update(IcSession& s, const ClassDistribution& p, int physical = 0,
                            int z = 0) {
  if (p.size() != s.scores.size()) throw ShapeMismatch("ic_update class count mismatch");
  const int i = argmax_lowest(p);
  if (s.mode == IcMode::argmax_only) {
    s.scores[i] += p[i];
  } else {
    for (size_t c = 0; c < p.size(); ++c) s.scores[c] += p[c];
  }
  ++s.updates;
  const int o = argmax_lowest(s.scores);
  double total = 0;
  for (double v : s.scores) total += v;
  const double s_max = s.updates == 1 ? s.scores[o] : s.scores[o] / total;
  StepResult r{s_max > s.threshold, o, s_max};
  s.trace.push_back({s.updates, physical, z, p, s.scores, o, s_max, r.converged, false});
  return r;
}

/// Bayesian classification state: log-space posterior and threshold.
struct BcSession {
  std::vector<double> log_posterior;
  double threshold = 0.85;
  int updates = 0;
  std::vector<TraceRecord> trace;

  BcSession(int classes, double lambda_p)
      : log_posterior(classes, -std::log(static_cast<double>(classes))),
        threshold(lambda_p) {}

  void set_prior(const ClassDistribution& prior) {
    if (prior.size() != log_posterior.size())
      throw ShapeMismatch("prior class count mismatch");
    for (size_t c = 0; c < prior.size(); ++c)
      log_posterior[c] = prior[c] > 0 ? std::log(prior[c])
                                      : -std::numeric_limits<double>::infinity();
  }

  ClassDistribution posterior() const {
    const double lse = detail::log_sum_exp(log_posterior);
    ClassDistribution p(log_posterior.size());
    for (size_t c = 0; c < p.size(); ++c) p[c] = std::exp(log_posterior[c] - lse);
    return p;
  }
};

/// One Bayes update from per-class log-likelihoods. If every class vanished
/// (all -inf) the posterior is left untouched and the iteration is flagged,
/// so a single outlier grasp cannot erase accumulated evidence.
inline StepResult bc_update_log(BcSession& s, const std::vector<double>& log_lik,
                                int physical = 0, int z = 0) {
  if (log_lik.size() != s.log_posterior.size())
    throw ShapeMismatch("bc_update class count mismatch");
  bool any_finite = false;
  for (double v : log_lik) any_finite |= std::isfinite(v);
  ++s.updates;
  bool flagged = false;
  if (any_finite) {
    for (size_t c = 0; c < log_lik.size(); ++c) s.log_posterior[c] += log_lik[c];
    const double lse = detail::log_sum_exp(s.log_posterior);
    for (double& v : s.log_posterior) v -= lse;
  } else {
    flagged = true;
  }
  const ClassDistribution p = s.posterior();
  const int o = argmax_lowest(p);
  StepResult r{p[o] > s.threshold, o, p[o]};
  std::vector<double> shown(log_lik.size(), 0.0);
  if (any_finite) {
    const double lse = detail::log_sum_exp(log_lik);
    for (size_t c = 0; c < log_lik.size(); ++c) shown[c] = std::exp(log_lik[c] - lse);
  }
  s.trace.push_back({s.updates, physical, z, shown, p, o, p[o], r.converged, flagged});
  return r;
}

/// Convenience entry taking raw likelihoods.
inline StepResult bc_update(BcSession& s, const std::vector<double>& likelihood,
                            int physical = 0, int z = 0) {
  std::vector<double> ll(likelihood.size());
  for (size_t c = 0; c < likelihood.size(); ++c) {
    if (!(likelihood[c] >= 0) || !std::isfinite(likelihood[c]))
      throw Error("bc_update: likelihoods must be finite and nonnegative");
    ll[c] = likelihood[c] > 0 ? std::log(likelihood[c])
                              : -std::numeric_limits<double>::infinity();
  }
  return bc_update_log(s, ll, physical, z);
}

// ---------------------------------------------------------------------------
// Grasp sources
// ---------------------------------------------------------------------------

/// Stream of query grasps for the recognition loops.
class GraspSource {
 public:
  virtual ~GraspSource() = default;
  virtual Grasp next() = 0;  // throws SamplerExhausted when drained
};

/// Self-play sampling from an object's contact candidates.
class ContactGraspSource : public GraspSource {
 public:
  ContactGraspSource(ContactCandidateSet contacts, int fingers, bool with_normals,
                     std::uint64_t seed, double sigma = 0, int retry_budget = 100)
      : contacts_(std::move(contacts)),
        fingers_(fingers),
        with_normals_(with_normals),
        sigma_(sigma),
        retry_(retry_budget),
        rng_(seed) {}

  Grasp next() override {
    for (int attempt = 0; attempt <= retry_; ++attempt) {
      Grasp g = sample_grasp(contacts_, fingers_, with_normals_, rng_, retry_);
      if (sigma_ > 0) {
        for (auto& p : g.points) {
          p.x += sigma_ * rng_.next_gaussian();
          p.y += sigma_ * rng_.next_gaussian();
          p.z += sigma_ * rng_.next_gaussian();
        }
        if (!grasp_parameterizable(g)) continue;
      }
      return g;
    }
    throw PersistentDegeneracy("noisy sampling kept producing degenerate grasps");
  }

 private:
  ContactCandidateSet contacts_;
  int fingers_;
  bool with_normals_;
  double sigma_;
  int retry_;
  SplitMix64 rng_;
};

/// Heterogeneous source: finger count drawn per grasp from a policy.
class PolicyGraspSource : public GraspSource {
 public:
  PolicyGraspSource(ContactCandidateSet contacts, IncompleteGraspPolicy policy,
                    int max_fingers, bool with_normals, std::uint64_t seed)
      : contacts_(std::move(contacts)),
        policy_(std::move(policy)),
        max_fingers_(max_fingers),
        with_normals_(with_normals),
        rng_(seed) {
    policy_.validate(max_fingers_);
  }

  Grasp next() override {
    return sample_incomplete(contacts_, policy_, max_fingers_, with_normals_, rng_);
  }

 private:
  ContactCandidateSet contacts_;
  IncompleteGraspPolicy policy_;
  int max_fingers_;
  bool with_normals_;
  SplitMix64 rng_;
};

/// Replays recorded grasps (e.g. externally measured contact streams).
class StreamGraspSource : public GraspSource {
 public:
  explicit StreamGraspSource(std::vector<Grasp> grasps) : grasps_(std::move(grasps)) {}

  Grasp next() override {
    if (pos_ >= grasps_.size()) throw SamplerExhausted("grasp stream drained");
    return grasps_[pos_++];
  }

 private:
  std::vector<Grasp> grasps_;
  size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Recognition runners
// ---------------------------------------------------------------------------

struct RecognitionResult {
  int predicted = -1;
  bool converged = false;
  double certainty = 0;
  int physical_grasps = 0;
  int updates = 0;
  std::vector<TraceRecord> trace;
};

/// Classifier bundle the runners work against. `log_lik` is only present for
/// likelihood models (KDE); IC works with any `predict`.
struct RecognizerModel {
  ParamShape shape;
  int classes = 0;
  ClassifierFn predict;
  std::function<std::vector<double>(const ParamVector&)> log_lik;
};

/// Wraps a model (shared, so the bundle owns what it closes over).
inline RecognizerModel recognizer_from(AnyModel model) {
  auto held = std::make_shared<AnyModel>(std::move(model));
  RecognizerModel r;
  r.shape = model_shape(*held);
  r.classes = static_cast<int>(model_classes(*held).size());
  r.predict = [held](const ParamVector& q) { return model_predict(*held, q); };
  if (std::holds_alternative<KdeModel>(*held)) {
    r.log_lik = [held](const ParamVector& q) {
      return std::get<KdeModel>(*held).log_likelihoods(q);
    };
  }
  return r;
}

/// Parameterize a query grasp the way the model expects; metadata mismatches
/// (finger count, normals, dimensionality) are rejected up front.
inline ParamVector parameterize_for(const ParamShape& shape, const Grasp& g) {
  if (g.fingers() != shape.fingers)
    throw MetadataMismatch("grasp finger count differs from model");
  if (g.with_normals() != shape.with_normals)
    throw MetadataMismatch("grasp normals flag differs from model");
  if (g.dimensionality != shape.dimensionality)
    throw MetadataMismatch("grasp dimensionality differs from model");
  return shape.normalized ? parameterize_normalized(g) : parameterize(g);
}

struct RunOptions {
  double threshold = 0.85;
  int max_physical = 100;
  IcMode ic_mode = IcMode::argmax_only;
};

namespace detail {

inline RecognitionResult finish(const std::vector<TraceRecord>& trace,
                                const StepResult& last, int physical, int updates) {
  RecognitionResult r;
  r.predicted = last.chosen;
  r.converged = last.converged;
  r.certainty = last.certainty;
  r.physical_grasps = physical;
  r.updates = updates;
  r.trace = trace;
  return r;
}

}  // namespace detail

/// Iterative classification: sample, classify, accumulate the top score,
/// stop once the normalized cumulative score clears the threshold.
inline RecognitionResult run_ic(GraspSource& source, const RecognizerModel& model,
                                const RunOptions& opt = {}) {
  IcSession session(model.classes, opt.threshold, opt.ic_mode);
  StepResult last;
  int physical = 0;
  while (physical < opt.max_physical) {
    const Grasp g = source.next();
    ++physical;
    const ParamVector q = parameterize_for(model.shape, g);
    last = ic_update(session, model.predict(q).probs, physical, g.fingers());
    if (last.converged) break;
  }
  return detail::finish(session.trace, last, physical, session.updates);
}

enum class PriorKind { naive, initial };

/// Sequential Bayesian classification over KDE likelihoods. With the initial
/// prior, the first grasp only seeds the prior through the auxiliary
/// classifier and Bayes updates start at the second grasp.
inline RecognitionResult run_bc(GraspSource& source, const RecognizerModel& model,
                                PriorKind prior = PriorKind::naive,
                                const ClassifierFn& aux = {},
                                const RunOptions& opt = {}) {
  if (!model.log_lik) throw Error("run_bc needs a likelihood model");
  BcSession session(model.classes, opt.threshold);
  StepResult last;
  int physical = 0;
  if (prior == PriorKind::initial) {
    if (!aux) throw Error("initial prior needs an auxiliary classifier");
    const Grasp g = source.next();
    ++physical;
    const ParamVector q = parameterize_for(model.shape, g);
    const auto out = aux(q);
    session.set_prior(out.probs);
    const ClassDistribution p = session.posterior();
    const int o = argmax_lowest(p);
    session.trace.push_back(
        {0, physical, g.fingers(), out.probs, p, o, p[o], false, out.underflow});
  }
  while (physical < opt.max_physical) {
    const Grasp g = source.next();
    ++physical;
    const ParamVector q = parameterize_for(model.shape, g);
    last = bc_update_log(session, model.log_lik(q), physical, g.fingers());
    if (last.converged) break;
  }
  return detail::finish(session.trace, last, physical, session.updates);
}

/// IC over z-finger sub-grasps: each physical n-finger grasp yields
/// `combinations` updates (default 4), with a convergence check after every
/// one so later combinations are skipped.
inline RecognitionResult run_ic_z(GraspSource& source, const RecognizerModel& model,
                                  int z, int combinations, SplitMix64& rng,
                                  const RunOptions& opt = {}) {
  IcSession session(model.classes, opt.threshold, opt.ic_mode);
  StepResult last;
  int physical = 0;
  while (physical < opt.max_physical) {
    const Grasp g = source.next();
    ++physical;
    const auto subs =
        static_cast<std::uint64_t>(combinations) >= binomial(g.fingers(), z)
            ? z_combinations(g, z)
            : sample_z_combinations(g, z, combinations, rng);
    bool done = false;
    for (const auto& sub : subs) {
      const ParamVector q = parameterize_for(model.shape, sub);
      last = ic_update(session, model.predict(q).probs, physical, z);
      if (last.converged) {
        done = true;
        break;
      }
    }
    if (done) break;
  }
  return detail::finish(session.trace, last, physical, session.updates);
}

/// BC over z-finger sub-grasps (same combination scheme as run_ic_z).
inline RecognitionResult run_bc_z(GraspSource& source, const RecognizerModel& model,
                                  int z, int combinations, SplitMix64& rng,
                                  PriorKind prior = PriorKind::naive,
                                  const ClassifierFn& aux = {},
                                  const RunOptions& opt = {}) {
  if (!model.log_lik) throw Error("run_bc_z needs a likelihood model");
  BcSession session(model.classes, opt.threshold);
  StepResult last;
  int physical = 0;
  if (prior == PriorKind::initial) {
    if (!aux) throw Error("initial prior needs an auxiliary classifier");
    const Grasp g = source.next();
    ++physical;
    const auto subs = sample_z_combinations(g, z, 1, rng);
    const ParamVector q = parameterize_for(model.shape, subs[0]);
    const auto out = aux(q);
    session.set_prior(out.probs);
    const ClassDistribution p = session.posterior();
    const int o = argmax_lowest(p);
    session.trace.push_back({0, physical, z, out.probs, p, o, p[o], false, out.underflow});
  }
  while (physical < opt.max_physical) {
    const Grasp g = source.next();
    ++physical;
    const auto subs =
        static_cast<std::uint64_t>(combinations) >= binomial(g.fingers(), z)
            ? z_combinations(g, z)
            : sample_z_combinations(g, z, combinations, rng);
    bool done = false;
    for (const auto& sub : subs) {
      const ParamVector q = parameterize_for(model.shape, sub);
      last = bc_update_log(session, model.log_lik(q), physical, z);
      if (last.converged) {
        done = true;
        break;
      }
    }
    if (done) break;
  }
  return detail::finish(session.trace, last, physical, session.updates);
}

enum class Method { ic, bc_np, bc_ip };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::ic: return "ic";
    case Method::bc_np: return "bc-np";
    case Method::bc_ip: return "bc-ip";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "ic") return Method::ic;
  if (s == "bc-np") return Method::bc_np;
  if (s == "bc-ip") return Method::bc_ip;
  throw ConfigError("unknown method: " + s);
}

/// Heterogeneous recognition: every sampled grasp is routed to the model
/// matching its finger count; all updates accumulate in one shared session.
inline RecognitionResult run_heterogeneous(GraspSource& source,
                                           const std::map<int, RecognizerModel>& models,
                                           Method method,
                                           const RunOptions& opt = {}) {
  int classes = 0;
  for (const auto& [z, m] : models) classes = m.classes;
  IcSession ic(classes, opt.threshold, opt.ic_mode);
  BcSession bc(classes, opt.threshold);
  StepResult last;
  int physical = 0;
  while (physical < opt.max_physical) {
    const Grasp g = source.next();
    ++physical;
    const auto it = models.find(g.fingers());
    if (it == models.end())
      throw MissingModelForZ("no model for z = " + std::to_string(g.fingers()));
    const ParamVector q = parameterize_for(it->second.shape, g);
    if (method == Method::ic) {
      last = ic_update(ic, it->second.predict(q).probs, physical, g.fingers());
    } else {
      if (!it->second.log_lik) throw Error("heterogeneous BC needs likelihood models");
      last = bc_update_log(bc, it->second.log_lik(q), physical, g.fingers());
    }
    if (last.converged) break;
  }
  const auto& trace = method == Method::ic ? ic.trace : bc.trace;
  const int updates = method == Method::ic ? ic.updates : bc.updates;
  return detail::finish(trace, last, physical, updates);
}

// ---------------------------------------------------------------------------
// Trace export: JSON lines, one record per update
// ---------------------------------------------------------------------------

inline void write_trace_jsonl(const RecognitionResult& r, std::ostream& out) {
  for (const auto& t : r.trace) {
    nlohmann::json j;
    j["update"] = t.update;
    j["physical"] = t.physical;
    j["z"] = t.z;
    j["p"] = t.probs;
    j["state"] = t.state;
    j["chosen"] = t.chosen;
    j["certainty"] = t.certainty;
    j["converged"] = t.converged;
    if (t.flagged) j["flagged"] = true;
    out << j.dump() << "\n";
  }
}

/// Parse a JSON-lines grasp stream: {"points": [[x,y,z]...], "normals": [...]}.
inline std::vector<Grasp> read_grasp_stream(std::istream& in) {
  std::vector<Grasp> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad grasp stream line: ") + e.what());
    }
    Grasp g;
    g.dimensionality = Dimensionality::spatial;
    if (!j.contains("points")) throw ParseError("grasp stream line lacks points");
    for (const auto& p : j["points"])
      g.points.push_back({p.at(0).get<double>(), p.at(1).get<double>(),
                          p.at(2).get<double>()});
    if (j.contains("normals"))
      for (const auto& p : j["normals"])
        g.normals.push_back({p.at(0).get<double>(), p.at(1).get<double>(),
                             p.at(2).get<double>()});
    validate_grasp(g);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace graspkit
