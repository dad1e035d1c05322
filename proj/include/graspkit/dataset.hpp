#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "graspkit/errors.hpp"
#include "graspkit/param.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

struct DatasetMeta {
  std::vector<std::string> class_names;
  double sigma = 0;
  std::uint64_t seed = 0;
  int per_class = 0;
};

/// Labeled parameterization vectors, all sharing one shape.
struct LabeledDataset {
  ParamShape shape;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;  // 0-based class indices
  DatasetMeta meta;

  size_t size() const { return rows.size(); }
  int classes() const { return static_cast<int>(meta.class_names.size()); }

  ParamVector vector_at(size_t i) const { return {rows[i], shape}; }

  std::vector<size_t> indices_of_class(int label) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) out.push_back(i);
    return out;
  }
};

inline std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  return out;
}

inline std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(tok);
  return out;
}

/// Text dataset file: `# key: value` manifest lines, a CSV header, then one
/// `label,q1..qw` row per sample.
inline void save_dataset(const LabeledDataset& ds, std::ostream& out) {
  out << "# graspkit-dataset v1\n";
  out << "# classes: " << join_names(ds.meta.class_names) << "\n";
  out << "# n: " << ds.shape.fingers << "\n";
  out << "# with_normals: " << (ds.shape.with_normals ? 1 : 0) << "\n";
  out << "# normalized: " << (ds.shape.normalized ? 1 : 0) << "\n";
  out << "# dimensionality: " << to_string(ds.shape.dimensionality) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", ds.meta.sigma);
  out << "# sigma: " << buf << "\n";
  out << "# seed: " << ds.meta.seed << "\n";
  out << "# per_class: " << ds.meta.per_class << "\n";
  const int w = param_dimension(ds.shape.fingers, ds.shape.with_normals,
                                ds.shape.dimensionality);
  out << "label";
  for (int i = 1; i <= w; ++i) out << ",q" << i;
  out << "\n";
  for (size_t r = 0; r < ds.rows.size(); ++r) {
    out << ds.labels[r];
    for (double x : ds.rows[r]) {
      std::snprintf(buf, sizeof(buf), ",%.17g", x);
      out << buf;
    }
    out << "\n";
  }
}

inline LabeledDataset load_dataset(std::istream& in) {
  LabeledDataset ds;
  std::string line;
  bool saw_magic = false;
  auto manifest_value = [](const std::string& l) {
    const size_t colon = l.find(':');
    if (colon == std::string::npos) throw ParseError("bad manifest line: " + l);
    size_t start = colon + 1;
    while (start < l.size() && l[start] == ' ') ++start;
    return l.substr(start);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("graspkit-dataset") != std::string::npos) {
        saw_magic = true;
      } else if (line.find("# classes:") == 0) {
        ds.meta.class_names = split_names(manifest_value(line));
      } else if (line.find("# n:") == 0) {
        ds.shape.fingers = std::stoi(manifest_value(line));
      } else if (line.find("# with_normals:") == 0) {
        ds.shape.with_normals = manifest_value(line) == "1";
      } else if (line.find("# normalized:") == 0) {
        ds.shape.normalized = manifest_value(line) == "1";
      } else if (line.find("# dimensionality:") == 0) {
        ds.shape.dimensionality = dimensionality_from_string(manifest_value(line));
      } else if (line.find("# sigma:") == 0) {
        ds.meta.sigma = std::stod(manifest_value(line));
      } else if (line.find("# seed:") == 0) {
        ds.meta.seed = std::stoull(manifest_value(line));
      } else if (line.find("# per_class:") == 0) {
        ds.meta.per_class = std::stoi(manifest_value(line));
      }
      continue;
    }
    if (line.rfind("label", 0) == 0) continue;  // header row
    std::istringstream ls(line);
    std::string tok;
    if (!std::getline(ls, tok, ',')) throw ParseError("empty dataset row");
    std::vector<double> row;
    int label = 0;
    try {
      label = std::stoi(tok);
      while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ParseError("malformed dataset row: " + line);
    }
    ds.labels.push_back(label);
    ds.rows.push_back(std::move(row));
  }
  if (!saw_magic) throw ParseError("not a graspkit dataset file");
  if (ds.meta.class_names.empty()) throw ParseError("dataset missing class names");
  const int w = param_dimension(ds.shape.fingers, ds.shape.with_normals,
                                ds.shape.dimensionality);
  for (size_t r = 0; r < ds.rows.size(); ++r) {
    if (static_cast<int>(ds.rows[r].size()) != w)
      throw ParseError("dataset row has wrong dimension");
    if (ds.labels[r] < 0 || ds.labels[r] >= ds.classes())
      throw ParseError("dataset label out of range");
  }
  return ds;
}

/// Deterministic per-class split: `fraction` of each class goes to the
/// validation side, chosen by a shuffle keyed off the dataset seed.
struct DatasetSplit {
  std::vector<size_t> train;
  std::vector<size_t> validation;
};

inline DatasetSplit validation_split(const LabeledDataset& ds, double fraction = 0.15) {
  DatasetSplit split;
  for (int c = 0; c < ds.classes(); ++c) {
    auto idx = ds.indices_of_class(c);
    SplitMix64 rng(SplitMix64::derive(ds.meta.seed, 0x5A5A0000ULL + c));
    for (size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.next_below(i)]);
    const size_t nval = static_cast<size_t>(fraction * static_cast<double>(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i)
      (i < nval ? split.validation : split.train).push_back(idx[i]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

}  // namespace graspkit
