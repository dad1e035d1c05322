// graspcli: data generation, training, recognition and evaluation for the
// grasp-based object recognition toolkit.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "graspkit/classify.hpp"
#include "graspkit/config.hpp"
#include "graspkit/contacts.hpp"
#include "graspkit/dataset.hpp"
#include "graspkit/evaluation.hpp"
#include "graspkit/mesh.hpp"
#include "graspkit/recognition.hpp"
#include "graspkit/sampling.hpp"

namespace fs = std::filesystem;
using namespace graspkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitNotConverged = 4;

/// Merges a config file under the flags: a flag that was not given on the
/// command line takes its value from "<section>.<key>" when present.
struct Resolver {
  CLI::App* cmd = nullptr;
  RunConfig cfg;
  std::string section;

  bool from_cfg(const std::string& flag, const std::string& key, std::string& out) const {
    if (cmd->count("--" + flag) > 0) return false;
    if (!cfg.has(section + "." + key)) return false;
    out = cfg.get(section + "." + key);
    return true;
  }
  void str(const std::string& flag, const std::string& key, std::string& v) const {
    std::string raw;
    if (from_cfg(flag, key, raw)) v = raw;
  }
  void u64(const std::string& flag, const std::string& key, std::uint64_t& v) const {
    std::string raw;
    if (from_cfg(flag, key, raw)) v = std::stoull(raw);
  }
  void integer(const std::string& flag, const std::string& key, int& v) const {
    std::string raw;
    if (from_cfg(flag, key, raw)) v = std::stoi(raw);
  }
  void real(const std::string& flag, const std::string& key, double& v) const {
    std::string raw;
    if (from_cfg(flag, key, raw)) v = std::stod(raw);
  }
  void boolean(const std::string& flag, const std::string& key, bool& v) const {
    std::string raw;
    if (from_cfg(flag, key, raw)) v = parse_bool(raw);
  }
};

RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return RunConfig::parse(in);
}

TriangleMesh load_mesh_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open mesh file: " + path);
  return load_mesh(in, format_from_path(path), fs::path(path).stem().string());
}

std::vector<std::string> default_names(const std::vector<std::string>& paths) {
  std::vector<std::string> names;
  for (const auto& p : paths) names.push_back(fs::path(p).stem().string());
  return names;
}

void require_paths(const std::vector<std::string>& paths) {
  for (const auto& p : paths)
    if (!fs::exists(p)) throw ConfigError("missing input file: " + p);
}

AnyModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model file: " + path);
  return load_model(in);
}

void save_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << contents;
}

std::vector<ContactCandidateSet> contacts_for(const std::vector<std::string>& mesh_paths) {
  std::vector<ContactCandidateSet> out;
  for (const auto& p : mesh_paths) out.push_back(mesh_to_contacts(load_mesh_file(p)));
  return out;
}

// -------------------------------------------------------------------------
// gen-data
// -------------------------------------------------------------------------

struct GenDataArgs {
  std::string config, meshes, names, output;
  int fingers = 4, samples = 2000, workers = 1;
  bool with_normals = false, normalize = false;
  double sigma = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int cmd_gen_data(const GenDataArgs& a) {
  const auto mesh_paths = split_list(a.meshes);
  if (mesh_paths.empty()) throw ConfigError("gen-data needs --meshes");
  require_paths(mesh_paths);
  auto names = a.names.empty() ? default_names(mesh_paths) : split_list(a.names);
  if (names.size() != mesh_paths.size())
    throw ConfigError("names/meshes count mismatch");
  if (a.output.empty()) throw ConfigError("gen-data needs --output");
  if (!a.seed_given) throw ConfigError("gen-data needs an explicit --seed");

  const auto objects = contacts_for(mesh_paths);

  DatasetOptions opt;
  opt.fingers = a.fingers;
  opt.per_class = a.samples;
  opt.with_normals = a.with_normals;
  opt.normalize = a.normalize;
  opt.sigma = a.sigma;
  opt.seed = a.seed;
  opt.workers = a.workers;

  LabeledDataset ds;
  ds.shape = {opt.fingers, opt.with_normals, opt.normalize, Dimensionality::spatial};
  ds.meta.class_names = names;
  ds.meta.sigma = opt.sigma;
  ds.meta.seed = opt.seed;
  ds.meta.per_class = opt.per_class;
  for (size_t l = 0; l < objects.size(); ++l) {
    const auto t0 = std::chrono::steady_clock::now();
    DatasetOptions sub = opt;
    sub.index_offset = l * static_cast<std::uint64_t>(opt.per_class);
    const auto part = generate_dataset({objects[l]}, {names[l]}, sub);
    for (size_t r = 0; r < part.rows.size(); ++r) {
      ds.rows.push_back(part.rows[r]);
      ds.labels.push_back(static_cast<int>(l));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%-20s %d samples in %.2f s\n", names[l].c_str(), opt.per_class, secs);
  }

  std::ofstream out(a.output, std::ios::binary);
  if (!out) throw Error("cannot write dataset: " + a.output);
  save_dataset(ds, out);
  std::printf("wrote %s (%zu rows)\n", a.output.c_str(), ds.size());
  return kExitOk;
}

// -------------------------------------------------------------------------
// train
// -------------------------------------------------------------------------

struct TrainArgs {
  std::string config, dataset, model = "kde", output, hidden;
  double bandwidth = 0, learning_rate = 0.05, momentum = 0.9;
  int k = 5, epochs = 60, batch = 32;
  std::uint64_t train_seed = 1;
};

int cmd_train(const TrainArgs& a) {
  if (a.dataset.empty() || a.output.empty())
    throw ConfigError("train needs --dataset and --output");
  require_paths({a.dataset});
  std::ifstream in(a.dataset, std::ios::binary);
  const LabeledDataset full = load_dataset(in);
  const auto split = validation_split(full);

  LabeledDataset train;
  train.shape = full.shape;
  train.meta = full.meta;
  for (size_t i : split.train) {
    train.rows.push_back(full.rows[i]);
    train.labels.push_back(full.labels[i]);
  }

  AnyModel model = [&]() -> AnyModel {
    if (a.model == "kde") return fit_kde(train, a.bandwidth);
    if (a.model == "knn") return fit_knn(train, a.k);
    if (a.model == "mlp") {
      MlpConfig cfg;
      if (!a.hidden.empty())
        for (const auto& h : split_list(a.hidden)) cfg.hidden.push_back(std::stoi(h));
      cfg.learning_rate = a.learning_rate;
      cfg.momentum = a.momentum;
      cfg.epochs = a.epochs;
      cfg.batch_size = a.batch;
      cfg.seed = a.train_seed;
      return train_mlp(train, cfg);
    }
    throw ConfigError("unknown model kind: " + a.model);
  }();

  int correct = 0;
  for (size_t i : split.validation) {
    const auto out = model_predict(model, full.vector_at(i));
    if (argmax_lowest(out.probs) == full.labels[i]) ++correct;
  }
  if (!split.validation.empty())
    std::printf("validation accuracy: %.1f%% (%zu held-out samples)\n",
                100.0 * correct / split.validation.size(), split.validation.size());

  std::ofstream out(a.output, std::ios::binary);
  if (!out) throw Error("cannot write model: " + a.output);
  save_model(model, out);
  std::printf("wrote %s\n", a.output.c_str());
  return kExitOk;
}

// -------------------------------------------------------------------------
// recognize
// -------------------------------------------------------------------------

struct RecognizeArgs {
  std::string config, model, mesh, stream, method = "bc-np", aux_model, trace, output;
  double threshold = 0.85, sigma = 0;
  int max_grasps = 100, fingers = 0, z = 0, combinations = 4;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int cmd_recognize(const RecognizeArgs& a) {
  if (a.model.empty()) throw ConfigError("recognize needs --model");
  if (a.mesh.empty() == a.stream.empty())
    throw ConfigError("recognize needs exactly one of --mesh / --stream");
  require_paths({a.model});
  const AnyModel any = load_model_file(a.model);
  const RecognizerModel model = recognizer_from(any);
  const Method method = method_from_string(a.method);

  ClassifierFn aux;
  std::shared_ptr<AnyModel> aux_held;
  if (method == Method::bc_ip) {
    if (a.aux_model.empty()) throw ConfigError("bc-ip needs --aux-model");
    require_paths({a.aux_model});
    aux_held = std::make_shared<AnyModel>(load_model_file(a.aux_model));
    if (model_shape(*aux_held) != model.shape)
      throw MetadataMismatch("auxiliary model shape differs from main model");
    aux = [aux_held](const ParamVector& q) { return model_predict(*aux_held, q); };
  }

  RunOptions opt;
  opt.threshold = a.threshold;
  opt.max_physical = a.max_grasps;

  std::unique_ptr<GraspSource> source;
  if (!a.mesh.empty()) {
    if (!a.seed_given) throw ConfigError("mesh-mode recognize needs an explicit --seed");
    require_paths({a.mesh});
    const int n = a.fingers > 0 ? a.fingers
                                : (a.z > 0 ? 0 : model.shape.fingers);
    if (n <= 0) throw ConfigError("z-mode recognize needs --fingers > z");
    source = std::make_unique<ContactGraspSource>(
        mesh_to_contacts(load_mesh_file(a.mesh)), n, model.shape.with_normals,
        SplitMix64::derive(a.seed, 1), a.sigma);
  } else {
    require_paths({a.stream});
    std::ifstream in(a.stream);
    auto grasps = read_grasp_stream(in);
    opt.max_physical = std::min<int>(opt.max_physical, static_cast<int>(grasps.size()));
    source = std::make_unique<StreamGraspSource>(std::move(grasps));
  }

  SplitMix64 comb_rng(SplitMix64::derive(a.seed, 2));
  RecognitionResult res;
  if (a.z > 0) {
    if (method == Method::ic)
      res = run_ic_z(*source, model, a.z, a.combinations, comb_rng, opt);
    else
      res = run_bc_z(*source, model, a.z, a.combinations, comb_rng,
                     method == Method::bc_ip ? PriorKind::initial : PriorKind::naive,
                     aux, opt);
  } else if (method == Method::ic) {
    res = run_ic(*source, model, opt);
  } else {
    res = run_bc(*source, model,
                 method == Method::bc_ip ? PriorKind::initial : PriorKind::naive,
                 aux, opt);
  }

  nlohmann::json j;
  const auto& classes = model_classes(any);
  j["predicted"] = res.predicted >= 0 ? classes[res.predicted] : "";
  j["predicted_index"] = res.predicted;
  j["converged"] = res.converged;
  j["certainty"] = res.certainty;
  j["physical_grasps"] = res.physical_grasps;
  j["updates"] = res.updates;
  j["posterior"] = res.trace.empty() ? std::vector<double>{} : res.trace.back().state;
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!a.output.empty()) save_text_file(a.output, text);
  if (!a.trace.empty()) {
    std::ofstream tr(a.trace, std::ios::binary);
    if (!tr) throw Error("cannot write trace: " + a.trace);
    write_trace_jsonl(res, tr);
  }
  return res.converged ? kExitOk : kExitNotConverged;
}

// -------------------------------------------------------------------------
// evaluate
// -------------------------------------------------------------------------

struct EvaluateArgs {
  std::string config, experiment = "trials", model, aux_model, meshes, names, queries,
              dataset, fractions, output_prefix = "report", method = "bc-np";
  double threshold = 0.85, sigma = 0, scale_lo = 0.1, scale_hi = 5.0;
  int fingers = 4, trials = 300, max_grasps = 100, workers = 1, z = 0,
      combinations = 4, max_k = 20, policy = 0, samples = 2000, variations = 50;
  bool with_normals = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void write_report_files(const TrialReport& rep, const std::string& prefix) {
  {
    std::ofstream out(prefix + ".json", std::ios::binary);
    write_report_json(rep, out);
  }
  {
    std::ofstream out(prefix + "_trials.csv", std::ios::binary);
    write_trials_csv(rep, out);
  }
  {
    std::ofstream out(prefix + "_confusion.csv", std::ios::binary);
    write_confusion_csv(rep, out);
  }
  std::printf("success (strict/lenient): %.1f%% / %.1f%%  -> %s.json\n",
              rep.overall_success_strict, rep.overall_success_lenient, prefix.c_str());
}

int cmd_evaluate(const EvaluateArgs& a) {
  if (!a.seed_given) throw ConfigError("evaluate needs an explicit --seed");
  TrialConfig cfg;
  cfg.method = method_from_string(a.method);
  cfg.threshold = a.threshold;
  cfg.fingers = a.fingers;
  cfg.trials_per_object = a.trials;
  cfg.max_physical = a.max_grasps;
  cfg.sigma = a.sigma;
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  cfg.z = a.z;
  cfg.combinations = a.combinations;

  const auto mesh_paths = split_list(a.meshes);
  auto names = a.names.empty() ? default_names(mesh_paths) : split_list(a.names);

  ClassifierFn aux;
  std::shared_ptr<AnyModel> aux_held;
  if (cfg.method == Method::bc_ip) {
    if (a.aux_model.empty()) throw ConfigError("bc-ip needs --aux-model");
    require_paths({a.aux_model});
    aux_held = std::make_shared<AnyModel>(load_model_file(a.aux_model));
    aux = [aux_held](const ParamVector& q) { return model_predict(*aux_held, q); };
  }

  if (a.experiment == "trials" || a.experiment == "scaled" || a.experiment == "curve") {
    if (a.model.empty()) throw ConfigError(a.experiment + " needs --model");
    if (mesh_paths.empty()) throw ConfigError(a.experiment + " needs --meshes");
    require_paths(mesh_paths);
    require_paths({a.model});
    const RecognizerModel model = recognizer_from(load_model_file(a.model));
    const auto objects = contacts_for(mesh_paths);
    if (a.experiment == "trials") {
      write_report_files(run_trials(objects, names, cfg, model, aux), a.output_prefix);
    } else if (a.experiment == "scaled") {
      write_report_files(scaled_object_trials(objects, names, cfg, model, a.scale_lo,
                                              a.scale_hi, aux),
                         a.output_prefix);
    } else {
      const auto curve = success_vs_samples(objects, names, cfg, model, a.max_k, aux);
      std::string csv = "k,success";
      for (const auto& n : names) csv += "," + n;
      csv += "\n";
      char buf[64];
      for (int k = 0; k < a.max_k; ++k) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g", k + 1, curve.success_at_k[k]);
        csv += buf;
        for (size_t o = 0; o < names.size(); ++o) {
          std::snprintf(buf, sizeof(buf), ",%.17g", curve.per_object[o][k]);
          csv += buf;
        }
        csv += "\n";
      }
      save_text_file(a.output_prefix + "_curve.csv", csv);
      std::printf("success@1=%.1f%% success@%d=%.1f%% -> %s_curve.csv\n",
                  curve.success_at_k.front(), a.max_k, curve.success_at_k.back(),
                  a.output_prefix.c_str());
    }
    return kExitOk;
  }

  if (a.experiment == "ablation") {
    if (a.dataset.empty() || a.model.empty())
      throw ConfigError("ablation needs --dataset (training data) and --model kind via --model kde|knn");
    if (mesh_paths.empty()) throw ConfigError("ablation needs --meshes");
    require_paths(mesh_paths);
    require_paths({a.dataset});
    std::ifstream in(a.dataset, std::ios::binary);
    const LabeledDataset full = load_dataset(in);
    const auto objects = contacts_for(mesh_paths);
    std::vector<double> fractions;
    for (const auto& f : split_list(a.fractions.empty() ? "0.05,0.2,0.5,1.0"
                                                        : a.fractions))
      fractions.push_back(std::stod(f));
    const std::string kind = a.model;
    const auto retrain = [&](const LabeledDataset& sub) {
      if (kind == "knn") return recognizer_from(fit_knn(sub));
      return recognizer_from(fit_kde(sub));
    };
    const auto points = data_ablation(fractions, full, objects, names, cfg, retrain);
    std::string csv = "fraction,success,mean_samples\n";
    char buf[96];
    for (const auto& p : points) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.fraction,
                    p.success_lenient, p.mean_samples);
      csv += buf;
    }
    save_text_file(a.output_prefix + "_ablation.csv", csv);
    std::printf("ablation written -> %s_ablation.csv\n", a.output_prefix.c_str());
    return kExitOk;
  }

  if (a.experiment == "geometry") {
    const auto query_paths = split_list(a.queries);
    if (query_paths.empty()) throw ConfigError("geometry needs --queries");
    require_paths(query_paths);
    GeometryOptions gopt;
    gopt.variations = a.variations;
    gopt.dataset.fingers = a.fingers;
    gopt.dataset.per_class = a.samples;
    gopt.dataset.with_normals = a.with_normals;
    gopt.dataset.seed = a.seed;
    gopt.dataset.workers = a.workers;
    const std::vector<TriangleMesh> bases = {
        generate_primitive(PrimitiveKind::box, {1.0, 1.0, 1.0}, 5),
        generate_primitive(PrimitiveKind::sphere, {0.6, 0, 0}),
        generate_primitive(PrimitiveKind::cylinder, {0.35, 1.8, 0})};
    const std::vector<std::string> families = {"box", "ellipsoid", "el_cylinder"};
    const auto variations = geometry_variations(bases, gopt);
    const auto ds = geometry_training_set(variations, families, gopt);
    const RecognizerModel model = recognizer_from(fit_kde(ds));
    std::vector<TriangleMesh> queries;
    for (const auto& p : query_paths) queries.push_back(load_mesh_file(p));
    const auto table = geometry_recognition(queries, model, families, cfg);
    std::string csv = "query";
    for (const auto& f : families) csv += "," + f;
    csv += "\n";
    char buf[64];
    for (const auto& row : table) {
      csv += row.name;
      for (double v : row.rate) {
        std::snprintf(buf, sizeof(buf), ",%.17g", v);
        csv += buf;
      }
      csv += "\n";
    }
    save_text_file(a.output_prefix + "_geometry.csv", csv);
    std::printf("geometry table -> %s_geometry.csv\n", a.output_prefix.c_str());
    return kExitOk;
  }

  if (a.experiment == "incomplete") {
    if (mesh_paths.empty()) throw ConfigError("incomplete needs --meshes");
    require_paths(mesh_paths);
    if (a.policy != 4 && a.policy != 5)
      throw ConfigError("incomplete needs --policy 4 or 5");
    const auto policy = a.policy == 4 ? incomplete_policy_4() : incomplete_policy_5();
    cfg.fingers = a.policy;
    const auto objects = contacts_for(mesh_paths);
    std::map<int, RecognizerModel> models;
    for (const auto& [z, p] : policy.pmf) {
      DatasetOptions dopt;
      dopt.fingers = z;
      dopt.per_class = a.samples;
      dopt.with_normals = a.with_normals;
      dopt.seed = SplitMix64::derive(a.seed, 0x2000 + z);
      dopt.workers = a.workers;
      models.emplace(z, recognizer_from(fit_kde(generate_dataset(objects, names, dopt))));
    }
    write_report_files(run_policy_trials(objects, names, cfg, models, policy),
                       a.output_prefix);
    return kExitOk;
  }

  throw ConfigError("unknown experiment: " + a.experiment);
}

// -------------------------------------------------------------------------
// primitives
// -------------------------------------------------------------------------

struct PrimitivesArgs {
  std::string kind = "box", dims = "1,1,1", scale, output, contacts;
  int resolution = 0;
};

int cmd_primitives(const PrimitivesArgs& a) {
  if (a.output.empty() && a.contacts.empty())
    throw ConfigError("primitives needs --output and/or --contacts");
  const auto d = split_list(a.dims);
  Vec3 dims{d.size() > 0 ? std::stod(d[0]) : 1.0,
            d.size() > 1 ? std::stod(d[1]) : 0.0,
            d.size() > 2 ? std::stod(d[2]) : 0.0};
  PrimitiveKind kind;
  if (a.kind == "box") kind = PrimitiveKind::box;
  else if (a.kind == "sphere") kind = PrimitiveKind::sphere;
  else if (a.kind == "cylinder") kind = PrimitiveKind::cylinder;
  else throw ConfigError("unknown primitive kind: " + a.kind);

  TriangleMesh mesh = generate_primitive(kind, dims, a.resolution);
  if (!a.scale.empty()) {
    const auto s = split_list(a.scale);
    if (s.size() != 3) throw ConfigError("--scale needs sx,sy,sz");
    mesh = scale_mesh(mesh, std::stod(s[0]), std::stod(s[1]), std::stod(s[2]));
  }
  if (!a.output.empty()) {
    std::ofstream out(a.output, std::ios::binary);
    if (!out) throw Error("cannot write mesh: " + a.output);
    const auto fmt = format_from_path(a.output);
    if (fmt == MeshFormat::obj) write_obj(mesh, out);
    else if (fmt == MeshFormat::off) write_off(mesh, out);
    else throw ConfigError("primitives can write .obj or .off");
    std::printf("wrote %s (%zu vertices, %zu faces)\n", a.output.c_str(),
                mesh.vertices.size(), mesh.faces.size());
  }
  if (!a.contacts.empty()) {
    std::ofstream out(a.contacts, std::ios::binary);
    if (!out) throw Error("cannot write contacts: " + a.contacts);
    write_contacts_csv(mesh_to_contacts(mesh), out);
    std::printf("wrote %s (%zu contacts)\n", a.contacts.c_str(), mesh.faces.size());
  }
  return kExitOk;
}

// -------------------------------------------------------------------------
// quality
// -------------------------------------------------------------------------

struct QualityArgs {
  std::string config, mesh, model, true_class, output;
  int fingers = 4, count = 500;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int cmd_quality(const QualityArgs& a) {
  if (a.mesh.empty()) throw ConfigError("quality needs --mesh");
  if (!a.seed_given) throw ConfigError("quality needs an explicit --seed");
  require_paths({a.mesh});
  const TriangleMesh mesh = load_mesh_file(a.mesh);
  const auto contacts = mesh_to_contacts(mesh);

  std::shared_ptr<AnyModel> held;
  RecognizerModel model;
  int true_class = -1;
  const bool with_model = !a.model.empty();
  if (with_model) {
    require_paths({a.model});
    held = std::make_shared<AnyModel>(load_model_file(a.model));
    model = recognizer_from(*held);
    const auto& classes = model_classes(*held);
    for (size_t c = 0; c < classes.size(); ++c)
      if (classes[c] == a.true_class) true_class = static_cast<int>(c);
    if (true_class < 0)
      throw ConfigError("--class must name one of the model's classes");
  }

  SplitMix64 rng(a.seed);
  std::string csv = with_model ? "volume_ratio,mean_normal_angle,certainty\n"
                               : "volume_ratio,mean_normal_angle\n";
  std::vector<double> quality, certainty;
  char buf[128];
  for (int i = 0; i < a.count; ++i) {
    const bool wn = with_model ? model.shape.with_normals : true;
    const int n = with_model ? model.shape.fingers : a.fingers;
    const Grasp g = sample_grasp(contacts, n, wn, rng);
    const GraspQuality q = grasp_quality(g, mesh);
    if (with_model) {
      const auto out = model.predict(parameterize_for(model.shape, g));
      quality.push_back(q.volume_ratio);
      certainty.push_back(out.probs[true_class]);
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", q.volume_ratio,
                    q.mean_normal_angle, out.probs[true_class]);
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", q.volume_ratio,
                    q.mean_normal_angle);
    }
    csv += buf;
  }
  if (!a.output.empty()) save_text_file(a.output, csv);
  else std::cout << csv;

  if (with_model && quality.size() >= 100) {
    const auto sp = quality_correlation(quality, certainty);
    std::printf("spearman rho=%.3f z=%.2f one-sided p=%.4f positive@95=%d\n", sp.rho,
                sp.z, sp.p_one_sided, sp.positive_at_95 ? 1 : 0);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grasp-based object recognition toolkit"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "sample grasps from meshes into a labeled dataset");
  gen->add_option("--config", gd.config, "config file (flat key = value with sections)");
  gen->add_option("--meshes", gd.meshes, "comma-separated mesh files (obj/stl/off)");
  gen->add_option("--names", gd.names, "class names (default: file stems)");
  gen->add_option("--fingers", gd.fingers, "contacts per grasp");
  gen->add_flag("--with-normals", gd.with_normals, "include contact normals");
  gen->add_flag("--normalize", gd.normalize, "scale-normalize vectors");
  gen->add_option("--samples", gd.samples, "samples per class");
  gen->add_option("--sigma", gd.sigma, "gaussian noise on contact locations");
  gen->add_option("--seed", gd.seed, "master seed (required)");
  gen->add_option("--workers", gd.workers, "worker threads");
  gen->add_option("--output", gd.output, "dataset file to write");

  TrainArgs tr;
  auto* trn = app.add_subcommand("train", "fit a classifier on a dataset");
  trn->add_option("--config", tr.config);
  trn->add_option("--dataset", tr.dataset, "dataset file");
  trn->add_option("--model", tr.model, "kde | knn | mlp");
  trn->add_option("--output", tr.output, "model file to write");
  trn->add_option("--bandwidth", tr.bandwidth, "kde bandwidth (0 = rule)");
  trn->add_option("--k", tr.k, "knn neighbor count");
  trn->add_option("--hidden", tr.hidden, "mlp hidden sizes, e.g. 64,64,64");
  trn->add_option("--epochs", tr.epochs);
  trn->add_option("--batch", tr.batch);
  trn->add_option("--learning-rate", tr.learning_rate);
  trn->add_option("--momentum", tr.momentum);
  trn->add_option("--train-seed", tr.train_seed, "mlp init/shuffle seed");

  RecognizeArgs rc;
  auto* rec = app.add_subcommand("recognize", "identify an object from grasps");
  rec->add_option("--config", rc.config);
  rec->add_option("--model", rc.model, "trained model file");
  rec->add_option("--mesh", rc.mesh, "query mesh (self-play sampling)");
  rec->add_option("--stream", rc.stream, "JSON-lines grasp stream");
  rec->add_option("--method", rc.method, "ic | bc-np | bc-ip");
  rec->add_option("--aux-model", rc.aux_model, "prior classifier for bc-ip");
  rec->add_option("--threshold", rc.threshold, "certainty threshold");
  rec->add_option("--max-grasps", rc.max_grasps, "physical grasp budget");
  rec->add_option("--fingers", rc.fingers, "sampled grasp size (mesh mode)");
  rec->add_option("--z", rc.z, "use z-finger sub-grasp updates");
  rec->add_option("--combinations", rc.combinations, "sub-grasps per physical grasp");
  rec->add_option("--sigma", rc.sigma, "query-side contact noise");
  rec->add_option("--seed", rc.seed, "sampling seed (mesh mode)");
  rec->add_option("--trace", rc.trace, "write per-update trace (JSON lines)");
  rec->add_option("--output", rc.output, "write result JSON here too");

  EvaluateArgs ev;
  auto* evl = app.add_subcommand("evaluate", "run an experiment protocol");
  evl->add_option("--config", ev.config);
  evl->add_option("--experiment", ev.experiment,
                  "trials | curve | ablation | scaled | geometry | incomplete");
  evl->add_option("--model", ev.model, "model file (or kind for ablation)");
  evl->add_option("--aux-model", ev.aux_model);
  evl->add_option("--meshes", ev.meshes);
  evl->add_option("--names", ev.names);
  evl->add_option("--queries", ev.queries, "query meshes (geometry)");
  evl->add_option("--dataset", ev.dataset, "training dataset (ablation)");
  evl->add_option("--fractions", ev.fractions, "ablation fractions");
  evl->add_option("--method", ev.method, "ic | bc-np | bc-ip");
  evl->add_option("--threshold", ev.threshold);
  evl->add_option("--fingers", ev.fingers);
  evl->add_option("--trials", ev.trials, "trials per object");
  evl->add_option("--max-grasps", ev.max_grasps);
  evl->add_option("--workers", ev.workers);
  evl->add_option("--sigma", ev.sigma);
  evl->add_option("--z", ev.z);
  evl->add_option("--combinations", ev.combinations);
  evl->add_option("--max-k", ev.max_k, "curve length");
  evl->add_option("--policy", ev.policy, "incomplete-grasp policy: 4 or 5");
  evl->add_option("--samples", ev.samples, "training samples per class (self-train modes)");
  evl->add_option("--variations", ev.variations, "resized variations per family (geometry)");
  evl->add_flag("--with-normals", ev.with_normals, "normals in self-train modes");
  evl->add_option("--scale-lo", ev.scale_lo);
  evl->add_option("--scale-hi", ev.scale_hi);
  evl->add_option("--seed", ev.seed, "master seed (required)");
  evl->add_option("--output-prefix", ev.output_prefix);

  PrimitivesArgs pr;
  auto* prm = app.add_subcommand("primitives", "generate primitive meshes");
  prm->add_option("--kind", pr.kind, "box | sphere | cylinder");
  prm->add_option("--dims", pr.dims, "box: lx,ly,lz; sphere: r; cylinder: r,h");
  prm->add_option("--resolution", pr.resolution,
                  "sphere subdivisions / cylinder segments (0 = default)");
  prm->add_option("--scale", pr.scale, "non-uniform resize sx,sy,sz");
  prm->add_option("--output", pr.output, "mesh file to write (.obj/.off)");
  prm->add_option("--contacts", pr.contacts, "also export contact CSV here");

  QualityArgs qa;
  auto* qlt = app.add_subcommand("quality", "grasp quality metrics for an object");
  qlt->add_option("--config", qa.config);
  qlt->add_option("--mesh", qa.mesh, "object mesh");
  qlt->add_option("--model", qa.model, "optional model for certainty correlation");
  qlt->add_option("--class", qa.true_class, "true class name (with --model)");
  qlt->add_option("--fingers", qa.fingers);
  qlt->add_option("--count", qa.count, "number of sampled grasps");
  qlt->add_option("--seed", qa.seed, "sampling seed (required)");
  qlt->add_option("--output", qa.output, "CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const RunConfig cfg = load_config(gd.config);
      Resolver r{gen, cfg, "data"};
      r.str("meshes", "meshes", gd.meshes);
      r.str("names", "names", gd.names);
      r.integer("fingers", "fingers", gd.fingers);
      r.boolean("with-normals", "with_normals", gd.with_normals);
      r.boolean("normalize", "normalize", gd.normalize);
      r.integer("samples", "samples_per_class", gd.samples);
      r.real("sigma", "sigma", gd.sigma);
      r.u64("seed", "seed", gd.seed);
      r.integer("workers", "workers", gd.workers);
      r.str("output", "output", gd.output);
      gd.seed_given = gen->count("--seed") > 0 || cfg.has("data.seed");
      return cmd_gen_data(gd);
    }
    if (trn->parsed()) {
      const RunConfig cfg = load_config(tr.config);
      Resolver r{trn, cfg, "train"};
      r.str("dataset", "dataset", tr.dataset);
      r.str("model", "model", tr.model);
      r.str("output", "output", tr.output);
      r.real("bandwidth", "bandwidth", tr.bandwidth);
      r.integer("k", "k", tr.k);
      r.str("hidden", "hidden", tr.hidden);
      r.integer("epochs", "epochs", tr.epochs);
      r.integer("batch", "batch", tr.batch);
      r.real("learning-rate", "learning_rate", tr.learning_rate);
      r.real("momentum", "momentum", tr.momentum);
      r.u64("train-seed", "train_seed", tr.train_seed);
      return cmd_train(tr);
    }
    if (rec->parsed()) {
      const RunConfig cfg = load_config(rc.config);
      Resolver r{rec, cfg, "recognize"};
      r.str("model", "model", rc.model);
      r.str("mesh", "mesh", rc.mesh);
      r.str("stream", "stream", rc.stream);
      r.str("method", "method", rc.method);
      r.str("aux-model", "aux_model", rc.aux_model);
      r.real("threshold", "threshold", rc.threshold);
      r.integer("max-grasps", "max_grasps", rc.max_grasps);
      r.integer("fingers", "fingers", rc.fingers);
      r.integer("z", "z", rc.z);
      r.integer("combinations", "combinations", rc.combinations);
      r.real("sigma", "sigma", rc.sigma);
      r.u64("seed", "seed", rc.seed);
      r.str("trace", "trace", rc.trace);
      r.str("output", "output", rc.output);
      rc.seed_given = rec->count("--seed") > 0 || cfg.has("recognize.seed");
      return cmd_recognize(rc);
    }
    if (evl->parsed()) {
      const RunConfig cfg = load_config(ev.config);
      Resolver r{evl, cfg, "evaluate"};
      r.str("experiment", "experiment", ev.experiment);
      r.str("model", "model", ev.model);
      r.str("aux-model", "aux_model", ev.aux_model);
      r.str("meshes", "meshes", ev.meshes);
      r.str("names", "names", ev.names);
      r.str("queries", "queries", ev.queries);
      r.str("dataset", "dataset", ev.dataset);
      r.str("fractions", "fractions", ev.fractions);
      r.str("method", "method", ev.method);
      r.real("threshold", "threshold", ev.threshold);
      r.integer("fingers", "fingers", ev.fingers);
      r.integer("trials", "trials", ev.trials);
      r.integer("max-grasps", "max_grasps", ev.max_grasps);
      r.integer("workers", "workers", ev.workers);
      r.real("sigma", "sigma", ev.sigma);
      r.integer("z", "z", ev.z);
      r.integer("combinations", "combinations", ev.combinations);
      r.integer("max-k", "max_k", ev.max_k);
      r.integer("policy", "policy", ev.policy);
      r.integer("samples", "samples_per_class", ev.samples);
      r.integer("variations", "variations", ev.variations);
      r.boolean("with-normals", "with_normals", ev.with_normals);
      r.real("scale-lo", "scale_lo", ev.scale_lo);
      r.real("scale-hi", "scale_hi", ev.scale_hi);
      r.u64("seed", "seed", ev.seed);
      r.str("output-prefix", "output_prefix", ev.output_prefix);
      ev.seed_given = evl->count("--seed") > 0 || cfg.has("evaluate.seed");
      return cmd_evaluate(ev);
    }
    if (prm->parsed()) return cmd_primitives(pr);
    if (qlt->parsed()) {
      const RunConfig cfg = load_config(qa.config);
      Resolver r{qlt, cfg, "quality"};
      r.str("mesh", "mesh", qa.mesh);
      r.str("model", "model", qa.model);
      r.str("class", "class", qa.true_class);
      r.integer("fingers", "fingers", qa.fingers);
      r.integer("count", "count", qa.count);
      r.u64("seed", "seed", qa.seed);
      r.str("output", "output", qa.output);
      qa.seed_given = qlt->count("--seed") > 0 || cfg.has("quality.seed");
      return cmd_quality(qa);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const MetadataMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
