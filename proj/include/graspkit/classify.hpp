#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "graspkit/dataset.hpp"
#include "graspkit/errors.hpp"
#include "graspkit/param.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

/// Class probability vector: nonnegative, sums to 1.
using ClassDistribution = std::vector<double>;

struct PredictOutcome {
  ClassDistribution probs;
  bool underflow = false;  // all raw likelihoods vanished; probs fell back to uniform
};

using ClassifierFn = std::function<PredictOutcome(const ParamVector&)>;

inline int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

namespace detail {

/// Squared distance between raw rows with wrap-around on circular components.
inline double row_dist2(const std::vector<double>& a, const std::vector<double>& b,
                        const std::vector<char>& circular) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d =
        circular[i] ? circular_diff(a[i], b[i]) : a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline std::vector<char> circular_mask(const ParamShape& shape) {
  const auto kinds = component_kinds(shape);
  std::vector<char> mask(kinds.size());
  for (size_t i = 0; i < kinds.size(); ++i) mask[i] = is_circular(kinds[i]);
  return mask;
}

inline double log_sum_exp(const std::vector<double>& xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bandwidth rule
// ---------------------------------------------------------------------------

/// Scott-style default: median over dimensions of the per-dimension standard
/// deviation, times M^(-1/(w+4)), floored at 1e-3.
inline double select_bandwidth(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw Error("select_bandwidth: no data");
  const size_t m = rows.size(), w = rows[0].size();
  std::vector<double> stds(w, 0);
  for (size_t d = 0; d < w; ++d) {
    double mean = 0;
    for (const auto& r : rows) mean += r[d];
    mean /= static_cast<double>(m);
    double var = 0;
    for (const auto& r : rows) var += (r[d] - mean) * (r[d] - mean);
    stds[d] = std::sqrt(var / static_cast<double>(m));
  }
  std::sort(stds.begin(), stds.end());
  const double median =
      w % 2 ? stds[w / 2] : 0.5 * (stds[w / 2 - 1] + stds[w / 2]);
  const double sigma =
      median * std::pow(static_cast<double>(m), -1.0 / (static_cast<double>(w) + 4.0));
  return std::max(sigma, 1e-3);
}

// ---------------------------------------------------------------------------
// Kernel density estimate likelihood model
// ---------------------------------------------------------------------------

/// Per-class Gaussian KDE over parameterization vectors:
///   P(q | class t) = (1/M_t) sum_j K_sigma(q - q_j)
/// with K_sigma(x) = (2 pi sigma^2)^(-w/2) exp(-|x|^2 / (2 sigma^2)) and
/// wrap-around differences on circular components. All internal accumulation
/// is in log space.
struct KdeModel {
  ParamShape shape;
  std::vector<std::string> class_names;
  std::vector<std::vector<std::vector<double>>> class_data;
  double bandwidth = 0;
  std::vector<char> circular;

  int classes() const { return static_cast<int>(class_names.size()); }

  void check_query(const ParamVector& q) const {
    if (q.shape != shape) throw ShapeMismatch("query shape differs from KDE model");
  }

  double log_likelihood(const ParamVector& q, int cls) const {
    check_query(q);
    const auto& data = class_data[cls];
    const double inv2s2 = 0.5 / (bandwidth * bandwidth);
    std::vector<double> exps;
    exps.reserve(data.size());
    for (const auto& row : data)
      exps.push_back(-detail::row_dist2(q.values, row, circular) * inv2s2);
    const double w = static_cast<double>(q.values.size());
    return detail::log_sum_exp(exps) - std::log(static_cast<double>(data.size())) -
           0.5 * w * std::log(2.0 * kPi * bandwidth * bandwidth);
  }

  double likelihood(const ParamVector& q, int cls) const {
    return std::exp(log_likelihood(q, cls));
  }

  std::vector<double> log_likelihoods(const ParamVector& q) const {
    std::vector<double> out(classes());
    for (int c = 0; c < classes(); ++c) out[c] = log_likelihood(q, c);
    return out;
  }

  /// Normalized per-class likelihoods; uniform (flagged) when every class
  /// underflows to zero density.
  PredictOutcome predict(const ParamVector& q) const {
    const auto ll = log_likelihoods(q);
    PredictOutcome out;
    out.probs.assign(classes(), 1.0 / classes());
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : ll) mx = std::max(mx, v);
    if (!std::isfinite(mx)) {
      out.underflow = true;
      return out;
    }
    double sum = 0;
    for (int c = 0; c < classes(); ++c) {
      out.probs[c] = std::exp(ll[c] - mx);
      sum += out.probs[c];
    }
    for (double& p : out.probs) p /= sum;
    return out;
  }
};

/// Fit a KDE model; bandwidth_override = 0 applies the selection rule.
inline KdeModel fit_kde(const LabeledDataset& ds, double bandwidth_override = 0) {
  KdeModel m;
  m.shape = ds.shape;
  m.class_names = ds.meta.class_names;
  m.circular = detail::circular_mask(ds.shape);
  m.class_data.resize(ds.classes());
  for (size_t i = 0; i < ds.size(); ++i)
    m.class_data[ds.labels[i]].push_back(ds.rows[i]);
  for (int c = 0; c < ds.classes(); ++c)
    if (m.class_data[c].empty())
      throw EmptyClass("class '" + ds.meta.class_names[c] + "' has no samples");
  m.bandwidth = bandwidth_override > 0 ? bandwidth_override : select_bandwidth(ds.rows);
  return m;
}

// ---------------------------------------------------------------------------
// k-nearest-neighbor classifier
// ---------------------------------------------------------------------------

/// Inverse-distance-weighted vote over the k nearest training vectors;
/// distance ties resolve by training-set order.
struct KnnModel {
  ParamShape shape;
  std::vector<std::string> class_names;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  int k = 5;
  std::vector<char> circular;

  int classes() const { return static_cast<int>(class_names.size()); }

  PredictOutcome predict(const ParamVector& q) const {
    if (q.shape != shape) throw ShapeMismatch("query shape differs from kNN model");
    std::vector<std::pair<double, size_t>> dist(rows.size());
    for (size_t i = 0; i < rows.size(); ++i)
      dist[i] = {std::sqrt(detail::row_dist2(q.values, rows[i], circular)), i};
    const size_t kk = std::min<size_t>(k, rows.size());
    std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
    PredictOutcome out;
    out.probs.assign(classes(), 0.0);
    double sum = 0;
    for (size_t j = 0; j < kk; ++j) {
      const double w = 1.0 / (dist[j].first + 1e-12);
      out.probs[labels[dist[j].second]] += w;
      sum += w;
    }
    for (double& p : out.probs) p /= sum;
    return out;
  }
};

inline KnnModel fit_knn(const LabeledDataset& ds, int k = 5) {
  if (k < 1 || static_cast<size_t>(k) > ds.size())
    throw InvalidK("k must lie in [1, M]");
  KnnModel m;
  m.shape = ds.shape;
  m.class_names = ds.meta.class_names;
  m.rows = ds.rows;
  m.labels = ds.labels;
  m.k = k;
  m.circular = detail::circular_mask(ds.shape);
  return m;
}

// ---------------------------------------------------------------------------
// Multilayer perceptron
// ---------------------------------------------------------------------------

struct MlpConfig {
  std::vector<int> hidden;  // empty = default: 3 layers of max(64, 8w)
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 100;
  std::uint64_t seed = 1;
};

/// ReLU hidden layers, softmax output, trained with minibatch SGD + momentum
/// on the cross-entropy loss. Deterministic for a fixed seed.
struct MlpModel {
  ParamShape shape;
  std::vector<std::string> class_names;
  std::vector<int> layer_sizes;               // [w, h..., m]
  std::vector<std::vector<double>> weights;   // per layer: (in+1) x out, bias last row

  int classes() const { return static_cast<int>(class_names.size()); }

  std::vector<double> forward(const std::vector<double>& x) const {
    std::vector<double> a = x;
    for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
      const int in = layer_sizes[l], outn = layer_sizes[l + 1];
      std::vector<double> z(outn, 0.0);
      for (int o = 0; o < outn; ++o) {
        double s = weights[l][in * outn + o];  // bias
        for (int i = 0; i < in; ++i) s += weights[l][i * outn + o] * a[i];
        z[o] = s;
      }
      if (l + 2 < layer_sizes.size())
        for (double& v : z) v = std::max(0.0, v);  // ReLU
      a = std::move(z);
    }
    // softmax
    double mx = *std::max_element(a.begin(), a.end());
    double sum = 0;
    for (double& v : a) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : a) v /= sum;
    return a;
  }

  PredictOutcome predict(const ParamVector& q) const {
    if (q.shape != shape) throw ShapeMismatch("query shape differs from MLP model");
    return {forward(q.values), false};
  }
};

/// Mean cross-entropy of the model on a batch.
inline double mlp_loss(const MlpModel& m, const std::vector<std::vector<double>>& xs,
                       const std::vector<int>& ys) {
  double loss = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const auto p = m.forward(xs[i]);
    loss += -std::log(std::max(p[ys[i]], 1e-300));
  }
  return loss / static_cast<double>(xs.size());
}

/// Analytic gradient of mlp_loss w.r.t. every weight, same layout as weights.
inline std::vector<std::vector<double>> mlp_gradients(
    const MlpModel& m, const std::vector<std::vector<double>>& xs,
    const std::vector<int>& ys) {
  const size_t layers = m.weights.size();
  std::vector<std::vector<double>> grad(layers);
  for (size_t l = 0; l < layers; ++l) grad[l].assign(m.weights[l].size(), 0.0);

  for (size_t s = 0; s < xs.size(); ++s) {
    // forward, keeping activations
    std::vector<std::vector<double>> acts = {xs[s]};
    for (size_t l = 0; l < layers; ++l) {
      const int in = m.layer_sizes[l], outn = m.layer_sizes[l + 1];
      std::vector<double> z(outn, 0.0);
      for (int o = 0; o < outn; ++o) {
        double v = m.weights[l][in * outn + o];
        for (int i = 0; i < in; ++i) v += m.weights[l][i * outn + o] * acts[l][i];
        z[o] = v;
      }
      if (l + 1 < layers)
        for (double& v : z) v = std::max(0.0, v);
      acts.push_back(std::move(z));
    }
    // softmax + cross-entropy delta
    std::vector<double> delta = acts.back();
    {
      double mx = *std::max_element(delta.begin(), delta.end());
      double sum = 0;
      for (double& v : delta) {
        v = std::exp(v - mx);
        sum += v;
      }
      for (double& v : delta) v /= sum;
      delta[ys[s]] -= 1.0;
    }
    // backprop
    for (size_t l = layers; l-- > 0;) {
      const int in = m.layer_sizes[l], outn = m.layer_sizes[l + 1];
      for (int o = 0; o < outn; ++o) {
        grad[l][in * outn + o] += delta[o];
        for (int i = 0; i < in; ++i)
          grad[l][i * outn + o] += delta[o] * acts[l][i];
      }
      if (l == 0) break;
      std::vector<double> prev(in, 0.0);
      for (int i = 0; i < in; ++i) {
        double v = 0;
        for (int o = 0; o < outn; ++o) v += m.weights[l][i * outn + o] * delta[o];
        prev[i] = acts[l][i] > 0 ? v : 0.0;  // through ReLU
      }
      delta = std::move(prev);
    }
  }
  const double inv = 1.0 / static_cast<double>(xs.size());
  for (auto& g : grad)
    for (double& v : g) v *= inv;
  return grad;
}

inline MlpModel train_mlp(const LabeledDataset& ds, MlpConfig cfg = {}) {
  if (ds.size() == 0) throw Error("train_mlp: empty dataset");
  const int w = static_cast<int>(ds.rows[0].size());
  const int m = ds.classes();
  if (cfg.hidden.empty()) cfg.hidden = std::vector<int>(3, std::max(64, 8 * w));

  MlpModel net;
  net.shape = ds.shape;
  net.class_names = ds.meta.class_names;
  net.layer_sizes = {w};
  for (int h : cfg.hidden) net.layer_sizes.push_back(h);
  net.layer_sizes.push_back(m);

  SplitMix64 rng(cfg.seed);
  net.weights.resize(net.layer_sizes.size() - 1);
  for (size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    const int in = net.layer_sizes[l], outn = net.layer_sizes[l + 1];
    net.weights[l].assign(static_cast<size_t>(in + 1) * outn, 0.0);
    const double scale = std::sqrt(2.0 / in);
    for (int i = 0; i < in; ++i)
      for (int o = 0; o < outn; ++o)
        net.weights[l][i * outn + o] = scale * rng.next_gaussian();
  }

  std::vector<std::vector<double>> velocity(net.weights.size());
  for (size_t l = 0; l < net.weights.size(); ++l)
    velocity[l].assign(net.weights[l].size(), 0.0);

  std::vector<size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);
    double epoch_loss = 0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::vector<double>> xs;
      std::vector<int> ys;
      for (size_t i = start; i < stop; ++i) {
        xs.push_back(ds.rows[order[i]]);
        ys.push_back(ds.labels[order[i]]);
      }
      const auto grad = mlp_gradients(net, xs, ys);
      for (size_t l = 0; l < net.weights.size(); ++l)
        for (size_t j = 0; j < net.weights[l].size(); ++j) {
          velocity[l][j] = cfg.momentum * velocity[l][j] -
                           cfg.learning_rate * grad[l][j];
          net.weights[l][j] += velocity[l][j];
        }
      epoch_loss += mlp_loss(net, xs, ys);
      ++batches;
    }
    if (!std::isfinite(epoch_loss / batches))
      throw DivergenceDetected("MLP loss became non-finite");
  }
  return net;
}

// ---------------------------------------------------------------------------
// Confusion matrix and classifier sufficiency
// ---------------------------------------------------------------------------

/// Row-stochastic confusion matrix (rows = true class) plus the sufficiency
/// measure: a classifier is sufficient when every row is strictly
/// diagonal-dominant; eta = m_p / m is the iterative success ceiling when only
/// m_p rows qualify.
struct SufficiencyReport {
  std::vector<std::vector<double>> confusion;
  bool sufficient = false;
  int m_p = 0;
  double eta = 0;  // percent
};

inline SufficiencyReport confusion_matrix(const ClassifierFn& h,
                                          const LabeledDataset& test) {
  const int m = test.classes();
  std::vector<std::vector<double>> counts(m, std::vector<double>(m, 0.0));
  std::vector<int> per_class(m, 0);
  for (size_t i = 0; i < test.size(); ++i) {
    const int truth = test.labels[i];
    const auto out = h(test.vector_at(i));
    counts[truth][argmax_lowest(out.probs)] += 1.0;
    ++per_class[truth];
  }
  SufficiencyReport rep;
  rep.confusion.assign(m, std::vector<double>(m, 0.0));
  for (int i = 0; i < m; ++i) {
    if (per_class[i] == 0)
      throw EmptyClass("no test samples for class " + std::to_string(i));
    for (int j = 0; j < m; ++j)
      rep.confusion[i][j] = counts[i][j] / per_class[i];
  }
  for (int i = 0; i < m; ++i) {
    bool dominant = true;
    for (int j = 0; j < m; ++j)
      if (j != i && rep.confusion[i][i] <= rep.confusion[i][j]) dominant = false;
    if (dominant) ++rep.m_p;
  }
  rep.sufficient = rep.m_p == m;
  rep.eta = 100.0 * rep.m_p / m;
  return rep;
}

// ---------------------------------------------------------------------------
// Persistence: text header + little-endian binary double payload
// ---------------------------------------------------------------------------

using AnyModel = std::variant<KdeModel, KnnModel, MlpModel>;

inline const ParamShape& model_shape(const AnyModel& m) {
  return std::visit([](const auto& x) -> const ParamShape& { return x.shape; }, m);
}
inline const std::vector<std::string>& model_classes(const AnyModel& m) {
  return std::visit(
      [](const auto& x) -> const std::vector<std::string>& { return x.class_names; },
      m);
}
inline PredictOutcome model_predict(const AnyModel& m, const ParamVector& q) {
  return std::visit([&](const auto& x) { return x.predict(q); }, m);
}

namespace detail {

inline void write_doubles(std::ostream& out, const std::vector<double>& xs) {
  static_assert(sizeof(double) == 8);
  for (double x : xs) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    if constexpr (std::endian::native == std::endian::big) {
      std::uint64_t sw = 0;
      for (int b = 0; b < 8; ++b) sw |= ((bits >> (8 * b)) & 0xFF) << (8 * (7 - b));
      bits = sw;
    }
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
}

inline std::vector<double> read_doubles(std::istream& in, size_t count) {
  std::vector<double> xs(count);
  for (size_t i = 0; i < count; ++i) {
    char buf[8];
    if (!in.read(buf, 8)) throw ParseError("model payload truncated");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) {
      std::uint64_t sw = 0;
      for (int b = 0; b < 8; ++b) sw |= ((bits >> (8 * b)) & 0xFF) << (8 * (7 - b));
      bits = sw;
    }
    std::memcpy(&xs[i], &bits, 8);
  }
  return xs;
}

inline void write_shape_lines(std::ostream& out, const ParamShape& s,
                              const std::vector<std::string>& classes) {
  out << "classes: " << join_names(classes) << "\n";
  out << "n: " << s.fingers << "\n";
  out << "with_normals: " << (s.with_normals ? 1 : 0) << "\n";
  out << "normalized: " << (s.normalized ? 1 : 0) << "\n";
  out << "dimensionality: " << to_string(s.dimensionality) << "\n";
}

}  // namespace detail

inline void save_model(const AnyModel& model, std::ostream& out) {
  out << "graspkit-model v1\n";
  if (std::holds_alternative<KdeModel>(model)) {
    const auto& m = std::get<KdeModel>(model);
    out << "kind: kde\n";
    detail::write_shape_lines(out, m.shape, m.class_names);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", m.bandwidth);
    out << "bandwidth: " << buf << "\n";
    out << "counts:";
    std::vector<double> payload;
    for (const auto& cls : m.class_data) out << ' ' << cls.size();
    out << "\n";
    size_t total = 0;
    for (const auto& cls : m.class_data)
      for (const auto& row : cls) total += row.size();
    out << "payload: " << total << "\n";
    for (const auto& cls : m.class_data)
      for (const auto& row : cls) detail::write_doubles(out, row);
  } else if (std::holds_alternative<KnnModel>(model)) {
    const auto& m = std::get<KnnModel>(model);
    out << "kind: knn\n";
    detail::write_shape_lines(out, m.shape, m.class_names);
    out << "k: " << m.k << "\n";
    out << "rows: " << m.rows.size() << "\n";
    out << "labels:";
    for (int l : m.labels) out << ' ' << l;
    out << "\n";
    size_t total = 0;
    for (const auto& row : m.rows) total += row.size();
    out << "payload: " << total << "\n";
    for (const auto& row : m.rows) detail::write_doubles(out, row);
  } else {
    const auto& m = std::get<MlpModel>(model);
    out << "kind: mlp\n";
    detail::write_shape_lines(out, m.shape, m.class_names);
    out << "layers:";
    for (int s : m.layer_sizes) out << ' ' << s;
    out << "\n";
    size_t total = 0;
    for (const auto& wl : m.weights) total += wl.size();
    out << "payload: " << total << "\n";
    for (const auto& wl : m.weights) detail::write_doubles(out, wl);
  }
}

inline AnyModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("graspkit-model", 0) != 0)
    throw ParseError("not a graspkit model file");
  std::string kind;
  ParamShape shape;
  std::vector<std::string> classes;
  double bandwidth = 0;
  int k = 0;
  size_t nrows = 0, payload = 0;
  std::vector<size_t> counts;
  std::vector<int> labels, layers;
  while (std::getline(in, line)) {
    const size_t colon = line.find(':');
    if (colon == std::string::npos) throw ParseError("bad model header line: " + line);
    const std::string key = line.substr(0, colon);
    std::string val = line.substr(colon + 1);
    if (!val.empty() && val[0] == ' ') val.erase(0, 1);
    if (key == "kind") kind = val;
    else if (key == "classes") classes = split_names(val);
    else if (key == "n") shape.fingers = std::stoi(val);
    else if (key == "with_normals") shape.with_normals = val == "1";
    else if (key == "normalized") shape.normalized = val == "1";
    else if (key == "dimensionality") shape.dimensionality = dimensionality_from_string(val);
    else if (key == "bandwidth") bandwidth = std::stod(val);
    else if (key == "k") k = std::stoi(val);
    else if (key == "rows") nrows = std::stoull(val);
    else if (key == "counts") {
      std::istringstream vs(val);
      size_t c;
      while (vs >> c) counts.push_back(c);
    } else if (key == "labels") {
      std::istringstream vs(val);
      int l;
      while (vs >> l) labels.push_back(l);
    } else if (key == "layers") {
      std::istringstream vs(val);
      int l;
      while (vs >> l) layers.push_back(l);
    } else if (key == "payload") {
      payload = std::stoull(val);
      break;
    }
  }
  const int w = param_dimension(shape.fingers, shape.with_normals, shape.dimensionality);
  const auto data = detail::read_doubles(in, payload);

  if (kind == "kde") {
    KdeModel m;
    m.shape = shape;
    m.class_names = classes;
    m.bandwidth = bandwidth;
    m.circular = detail::circular_mask(shape);
    size_t pos = 0;
    for (size_t c = 0; c < counts.size(); ++c) {
      std::vector<std::vector<double>> rows(counts[c]);
      for (auto& row : rows) {
        row.assign(data.begin() + pos, data.begin() + pos + w);
        pos += w;
      }
      m.class_data.push_back(std::move(rows));
    }
    if (pos != data.size()) throw ParseError("KDE payload size mismatch");
    return m;
  }
  if (kind == "knn") {
    KnnModel m;
    m.shape = shape;
    m.class_names = classes;
    m.k = k;
    m.labels = labels;
    m.circular = detail::circular_mask(shape);
    if (nrows * w != data.size() || labels.size() != nrows)
      throw ParseError("kNN payload size mismatch");
    size_t pos = 0;
    for (size_t r = 0; r < nrows; ++r) {
      m.rows.emplace_back(data.begin() + pos, data.begin() + pos + w);
      pos += w;
    }
    return m;
  }
  if (kind == "mlp") {
    MlpModel m;
    m.shape = shape;
    m.class_names = classes;
    m.layer_sizes = layers;
    size_t pos = 0;
    for (size_t l = 0; l + 1 < layers.size(); ++l) {
      const size_t sz = static_cast<size_t>(layers[l] + 1) * layers[l + 1];
      if (pos + sz > data.size()) throw ParseError("MLP payload size mismatch");
      m.weights.emplace_back(data.begin() + pos, data.begin() + pos + sz);
      pos += sz;
    }
    if (pos != data.size()) throw ParseError("MLP payload size mismatch");
    return m;
  }
  throw ParseError("unknown model kind: " + kind);
}

}  // namespace graspkit
