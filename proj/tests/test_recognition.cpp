#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "graspkit/evaluation.hpp"
#include "graspkit/mesh.hpp"
#include "graspkit/recognition.hpp"
#include "test_util.hpp"

using namespace graspkit;

namespace {

/// Three well-separated primitives and a KDE model over them.
struct Fixture {
  std::vector<ContactCandidateSet> objects;
  std::vector<std::string> names = {"box", "ellipsoid", "cylinder"};
  KdeModel kde;
  RecognizerModel model;

  explicit Fixture(int fingers = 4, bool with_normals = true, int per_class = 800,
                   bool normalize = false) {
    const auto box = generate_primitive(PrimitiveKind::box, {1.0, 1.3, 0.7});
    const auto ell = scale_mesh(generate_primitive(PrimitiveKind::sphere, {0.6, 0, 0}, 2),
                                1.0, 0.75, 1.25);
    const auto cyl = generate_primitive(PrimitiveKind::cylinder, {0.5, 1.4, 0}, 48);
    objects = {mesh_to_contacts(box), mesh_to_contacts(ell), mesh_to_contacts(cyl)};
    DatasetOptions opt;
    opt.fingers = fingers;
    opt.per_class = per_class;
    opt.with_normals = with_normals;
    opt.normalize = normalize;
    opt.seed = 11;
    opt.workers = 2;
    kde = fit_kde(generate_dataset(objects, names, opt));
    model = recognizer_from(kde);
  }
};

ClassDistribution dist(std::initializer_list<double> xs) { return xs; }

}  // namespace

TEST_CASE("ic_update follows the scoring arithmetic") {
  IcSession s(3, 0.85);

  // first iteration, p = (0.7, 0.2, 0.1): raw top score, no convergence
  auto r = ic_update(s, dist({0.7, 0.2, 0.1}));
  CHECK_FALSE(r.converged);
  CHECK(r.chosen == 0);
  CHECK(r.certainty == doctest::Approx(0.7));
  CHECK(s.scores[0] == doctest::Approx(0.7));
  CHECK(s.scores[1] == 0.0);

  // second iteration p = (0.8, 0.1, 0.1): s = (1.5, 0, 0), normalized 1.0
  r = ic_update(s, dist({0.8, 0.1, 0.1}));
  CHECK(r.converged);
  CHECK(r.certainty == doctest::Approx(1.0));
}

TEST_CASE("ic_update first-iteration early exit") {
  IcSession s(3, 0.85);
  const auto r = ic_update(s, dist({0.9, 0.05, 0.05}));
  CHECK(r.converged);
  CHECK(r.chosen == 0);
  CHECK(r.certainty == doctest::Approx(0.9));
}

TEST_CASE("ic two-step trace example") {
  IcSession s(3, 0.99);
  ic_update(s, dist({0.6, 0.4, 0.0}));
  const auto r = ic_update(s, dist({0.8, 0.1, 0.1}));
  CHECK(s.scores[0] == doctest::Approx(1.4));
  CHECK(s.scores[1] == 0.0);
  CHECK(r.certainty == doctest::Approx(1.0));
  CHECK(r.converged);
}

TEST_CASE("ic scores are monotone; totals grow as specified") {
  SplitMix64 rng(3);
  IcSession argmax_s(4, 2.0), full_s(4, 2.0, IcMode::full_accumulate);
  std::vector<double> prev_a(4, 0), prev_f(4, 0);
  for (int t = 0; t < 200; ++t) {
    ClassDistribution p(4);
    double sum = 0;
    for (double& v : p) {
      v = rng.next_in(0.01, 1.0);
      sum += v;
    }
    for (double& v : p) v /= sum;
    const double max_p = *std::max_element(p.begin(), p.end());

    double before_a = 0, before_f = 0;
    for (int c = 0; c < 4; ++c) {
      before_a += argmax_s.scores[c];
      before_f += full_s.scores[c];
    }
    ic_update(argmax_s, p);
    ic_update(full_s, p);
    double after_a = 0, after_f = 0;
    for (int c = 0; c < 4; ++c) {
      CHECK(argmax_s.scores[c] >= prev_a[c]);
      CHECK(full_s.scores[c] >= prev_f[c]);
      after_a += argmax_s.scores[c];
      after_f += full_s.scores[c];
    }
    CHECK(after_a - before_a == doctest::Approx(max_p).epsilon(1e-12));
    CHECK(after_f - before_f == doctest::Approx(1.0).epsilon(1e-12));
    prev_a = argmax_s.scores;
    prev_f = full_s.scores;
  }
}

TEST_CASE("bc_update: one-step Bayes") {
  BcSession s(2, 0.99);
  auto r = bc_update(s, {0.8, 0.2});
  const auto p = s.posterior();
  CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_FALSE(r.converged);
}

TEST_CASE("bc_update: uninformative likelihoods are a fixed point") {
  BcSession s(3, 0.99);
  s.set_prior(dist({0.5, 0.3, 0.2}));
  bc_update(s, {0.4, 0.4, 0.4});
  const auto p = s.posterior();
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("bc_update: prior (0.8,0.2) with flipped likelihoods balances") {
  BcSession s(2, 0.99);
  s.set_prior(dist({0.8, 0.2}));
  bc_update(s, {0.2, 0.8});
  const auto p = s.posterior();
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bc_update: vanished likelihoods skip and flag the iteration") {
  BcSession s(2, 0.99);
  s.set_prior(dist({0.7, 0.3}));
  const double ninf = -std::numeric_limits<double>::infinity();
  bc_update_log(s, {ninf, ninf});
  const auto p = s.posterior();
  CHECK(p[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(s.trace.back().flagged);
  CHECK_THROWS_AS(bc_update(s, {-1.0, 0.5}), Error);  // negative likelihood
}

TEST_CASE("bc posterior stays a simplex across many harsh updates") {
  SplitMix64 rng(8);
  BcSession s(3, 2.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> ll = {rng.next_in(-800, 0), rng.next_in(-800, 0),
                              rng.next_in(-800, 0)};
    bc_update_log(s, ll);
    const auto p = s.posterior();
    double sum = 0;
    for (double v : p) {
      CHECK(v >= 0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("class relabeling permutes scores and posterior identically") {
  SplitMix64 rng(5);
  const std::vector<int> perm = {2, 0, 1};
  IcSession a(3, 2.0), b(3, 2.0);
  BcSession ba(3, 2.0), bb(3, 2.0);
  for (int t = 0; t < 50; ++t) {
    ClassDistribution p(3);
    double sum = 0;
    for (double& v : p) {
      v = rng.next_in(0.05, 1.0);
      sum += v;
    }
    for (double& v : p) v /= sum;
    ClassDistribution pp(3);
    for (int c = 0; c < 3; ++c) pp[perm[c]] = p[c];
    ic_update(a, p);
    ic_update(b, pp);
    std::vector<double> ll = {std::log(p[0]), std::log(p[1]), std::log(p[2])};
    std::vector<double> llp(3);
    for (int c = 0; c < 3; ++c) llp[perm[c]] = ll[c];
    bc_update_log(ba, ll);
    bc_update_log(bb, llp);
  }
  for (int c = 0; c < 3; ++c) {
    CHECK(a.scores[c] == doctest::Approx(b.scores[perm[c]]).epsilon(1e-12));
    CHECK(ba.posterior()[c] == doctest::Approx(bb.posterior()[perm[c]]).epsilon(1e-9));
  }
}

TEST_CASE("run_ic with an oracle classifier converges immediately") {
  Fixture fx;
  RecognizerModel oracle = fx.model;
  oracle.predict = [](const ParamVector&) {
    return PredictOutcome{{1.0, 0.0, 0.0}, false};
  };
  ContactGraspSource source(fx.objects[0], 4, true, 42);
  const auto res = run_ic(source, oracle);
  CHECK(res.converged);
  CHECK(res.predicted == 0);
  CHECK(res.physical_grasps == 1);
}

TEST_CASE("run_ic with a uniform classifier") {
  Fixture fx;
  RecognizerModel uniform = fx.model;
  uniform.predict = [](const ParamVector&) {
    return PredictOutcome{{0.25, 0.25, 0.25, 0.25}, false};
  };
  uniform.classes = 4;

  // full accumulation: the normalized score is pinned at 1/m, so an
  // uninformative classifier runs out the budget
  ContactGraspSource source(fx.objects[0], 4, true, 42);
  RunOptions opt;
  opt.max_physical = 30;
  opt.ic_mode = IcMode::full_accumulate;
  const auto res = run_ic(source, uniform, opt);
  CHECK_FALSE(res.converged);
  CHECK(res.physical_grasps == 30);
  CHECK(res.predicted == 0);  // argmax tie resolves to the lowest index

  // argmax-only scoring concentrates tied updates on the lowest index, so the
  // normalized score degenerates to 1 at the second update
  ContactGraspSource source2(fx.objects[0], 4, true, 42);
  RunOptions opt2;
  opt2.max_physical = 30;
  const auto res2 = run_ic(source2, uniform, opt2);
  CHECK(res2.converged);
  CHECK(res2.predicted == 0);
  CHECK(res2.physical_grasps == 2);
}

TEST_CASE("bc with always-uniform likelihoods exhausts the budget") {
  Fixture fx;
  RecognizerModel uniform = fx.model;
  uniform.log_lik = [](const ParamVector&) {
    return std::vector<double>{-1.0, -1.0, -1.0};
  };
  ContactGraspSource source(fx.objects[1], 4, true, 7);
  RunOptions opt;
  opt.max_physical = 25;
  opt.threshold = 0.85;  // > 1/m
  const auto res = run_bc(source, uniform, PriorKind::naive, {}, opt);
  CHECK_FALSE(res.converged);
  CHECK(res.physical_grasps == 25);
}

TEST_CASE("run_bc recognizes the primitives") {
  Fixture fx;
  int correct = 0;
  const int trials = 40;
  for (int object = 0; object < 3; ++object)
    for (int t = 0; t < trials; ++t) {
      ContactGraspSource source(fx.objects[object], 4, true,
                                SplitMix64::derive(1000 + object, t));
      const auto res = run_bc(source, fx.model);
      if (res.converged && res.predicted == object) ++correct;
    }
  CHECK(static_cast<double>(correct) / (3 * trials) > 0.9);
}

TEST_CASE("run_bc with trivial threshold converges after first update") {
  Fixture fx;
  ContactGraspSource source(fx.objects[2], 4, true, 5);
  RunOptions opt;
  opt.threshold = 0.0;
  const auto res = run_bc(source, fx.model, PriorKind::naive, {}, opt);
  CHECK(res.converged);
  CHECK(res.physical_grasps == 1);
  CHECK(res.updates == 1);
}

TEST_CASE("bc-ip uses the first grasp for the prior only") {
  Fixture fx;
  const ClassifierFn aux = [&](const ParamVector& q) { return fx.kde.predict(q); };
  ContactGraspSource source(fx.objects[0], 4, true, 31);
  RunOptions opt;
  opt.threshold = 0.99;
  const auto res = run_bc(source, fx.model, PriorKind::initial, aux, opt);
  REQUIRE(!res.trace.empty());
  CHECK(res.trace.front().update == 0);  // prior injection record
  CHECK(res.physical_grasps >= 2);       // prior grasp + at least one update
  CHECK(res.updates == res.physical_grasps - 1);
  CHECK_THROWS_AS(run_bc(source, fx.model, PriorKind::initial, {}, opt), Error);
}

TEST_CASE("z-variant: 4 updates per physical grasp, early exit") {
  Fixture fx3(3, true, 800);  // model over 3-finger grasps
  SplitMix64 comb(77);
  ContactGraspSource source(fx3.objects[0], 4, true, 99);  // physical n = 4
  RunOptions opt;
  opt.threshold = 2.0;  // never converge
  opt.max_physical = 5;
  const auto res = run_bc_z(source, fx3.model, 3, 4, comb, PriorKind::naive, {}, opt);
  CHECK(res.physical_grasps == 5);
  CHECK(res.updates == 20);  // c(4,3) = 4 per grasp
  for (const auto& t : res.trace) CHECK(t.z == 3);

  // early exit: low threshold stops mid-grasp with combination count < 4
  SplitMix64 comb2(78);
  ContactGraspSource source2(fx3.objects[0], 4, true, 99);
  RunOptions opt2;
  opt2.threshold = 0.0;
  const auto quick = run_bc_z(source2, fx3.model, 3, 4, comb2, PriorKind::naive, {},
                              opt2);
  CHECK(quick.converged);
  CHECK(quick.physical_grasps == 1);
  CHECK(quick.updates == 1);
}

TEST_CASE("heterogeneous recognition routes by finger count") {
  Fixture fx3(3, true, 600);
  Fixture fx4(4, true, 600);
  std::map<int, RecognizerModel> models;
  models.emplace(3, fx3.model);
  models.emplace(4, fx4.model);

  PolicyGraspSource source(fx4.objects[1], incomplete_policy_4(), 4, true, 13);
  const auto res = run_heterogeneous(source, models, Method::bc_np);
  CHECK(res.converged);
  CHECK(res.predicted == 1);
  std::set<int> zs;
  for (const auto& t : res.trace) zs.insert(t.z);
  // over enough updates both finger counts appear; with quick convergence at
  // least one valid z was used
  for (int z : zs) CHECK((z == 3 || z == 4));

  // missing model for z = 3 raises at the first 3-finger draw
  std::map<int, RecognizerModel> incomplete;
  incomplete.emplace(4, fx4.model);
  bool threw = false;
  for (int seed = 0; seed < 20 && !threw; ++seed) {
    PolicyGraspSource src(fx4.objects[1], incomplete_policy_4(), 4, true, seed);
    try {
      run_heterogeneous(src, incomplete, Method::bc_np);
    } catch (const MissingModelForZ&) {
      threw = true;
    }
  }
  CHECK(threw);
}

TEST_CASE("point-mass policy reduces to the homogeneous runner") {
  Fixture fx(4, true, 600);
  const IncompleteGraspPolicy point{{{4, 1.0}}};
  PolicyGraspSource ps(fx.objects[2], point, 4, true, 404);
  std::map<int, RecognizerModel> models;
  models.emplace(4, fx.model);
  const auto het = run_heterogeneous(ps, models, Method::bc_np);

  // the policy draws z first, so align a plain source on the same stream:
  // policy draw consumes one double before each grasp
  class SkippingSource : public GraspSource {
   public:
    SkippingSource(ContactCandidateSet c, std::uint64_t seed)
        : contacts_(std::move(c)), rng_(seed) {}
    Grasp next() override {
      (void)rng_.next_double();  // the policy draw
      return sample_grasp(contacts_, 4, true, rng_);
    }
   private:
    ContactCandidateSet contacts_;
    SplitMix64 rng_;
  };
  SkippingSource plain(fx.objects[2], 404);
  const auto direct = run_bc(plain, fx.model);
  CHECK(het.predicted == direct.predicted);
  CHECK(het.physical_grasps == direct.physical_grasps);
  CHECK(het.certainty == doctest::Approx(direct.certainty).epsilon(1e-12));
}

TEST_CASE("ic recognizes the primitives and logs finite iteration counts") {
  Fixture fx;
  int correct = 0;
  double total_samples = 0;
  const int trials = 30;
  for (int object = 0; object < 3; ++object)
    for (int t = 0; t < trials; ++t) {
      ContactGraspSource source(fx.objects[object], 4, true,
                                SplitMix64::derive(4000 + object, t));
      const auto res = run_ic(source, fx.model);
      if (res.converged && res.predicted == object) ++correct;
      total_samples += res.physical_grasps;
      CHECK(res.physical_grasps >= 1);
      CHECK(static_cast<int>(res.trace.size()) == res.updates);
    }
  CHECK(static_cast<double>(correct) / (3 * trials) > 0.85);
  CHECK(total_samples / (3 * trials) < 20.0);
}

TEST_CASE("bc-ip with a strong prior needs no more grasps than bc-np") {
  // the hard (normals-off) setting, where bc-np needs several grasps; an
  // oracle one-hot prior converges right after its first update
  Fixture fx(4, false, 1500);
  std::vector<int> np_samples, ip_samples;
  for (int object = 0; object < 3; ++object)
    for (int t = 0; t < 50; ++t) {
      const std::uint64_t seed = SplitMix64::derive(6000 + object, t);
      ContactGraspSource a(fx.objects[object], 4, false, seed);
      np_samples.push_back(run_bc(a, fx.model).physical_grasps);
      const ClassifierFn oracle = [object, &fx](const ParamVector&) {
        PredictOutcome out;
        out.probs.assign(fx.model.classes, 0.0);
        out.probs[object] = 1.0;
        return out;
      };
      ContactGraspSource b(fx.objects[object], 4, false, seed);
      ip_samples.push_back(
          run_bc(b, fx.model, PriorKind::initial, oracle).physical_grasps);
    }
  std::sort(np_samples.begin(), np_samples.end());
  std::sort(ip_samples.begin(), ip_samples.end());
  CHECK(ip_samples[ip_samples.size() / 2] <= np_samples[np_samples.size() / 2]);
}

TEST_CASE("stream sources drain into SamplerExhausted") {
  Fixture fx(4, true, 400);
  SplitMix64 rng(6);
  std::vector<Grasp> grasps;
  for (int i = 0; i < 3; ++i) grasps.push_back(sample_grasp(fx.objects[0], 4, true, rng));
  StreamGraspSource source(std::move(grasps));
  RunOptions opt;
  opt.threshold = 2.0;
  CHECK_THROWS_AS(run_bc(source, fx.model, PriorKind::naive, {}, opt),
                  SamplerExhausted);
}

TEST_CASE("metadata mismatches are rejected") {
  Fixture fx(4, true, 300);
  SplitMix64 rng(6);
  const Grasp g5 = sample_grasp(fx.objects[0], 5, true, rng);
  CHECK_THROWS_AS(parameterize_for(fx.model.shape, g5), MetadataMismatch);
  const Grasp g4 = sample_grasp(fx.objects[0], 4, false, rng);
  CHECK_THROWS_AS(parameterize_for(fx.model.shape, g4), MetadataMismatch);
}

TEST_CASE("trace JSON lines carry one record per update") {
  Fixture fx(4, true, 400);
  ContactGraspSource source(fx.objects[0], 4, true, 21);
  RunOptions opt;
  opt.threshold = 2.0;
  opt.max_physical = 4;
  const auto res = run_bc(source, fx.model, PriorKind::naive, {}, opt);
  std::ostringstream out;
  write_trace_jsonl(res, out);
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("update"));
    CHECK(j.contains("physical"));
    CHECK(j.contains("z"));
    CHECK(j.contains("p"));
    CHECK(j.contains("state"));
    CHECK(j.contains("converged"));
    ++lines;
  }
  CHECK(lines == res.updates);
}

TEST_CASE("grasp stream parsing") {
  const std::string text =
      R"({"points": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]]})"
      "\n"
      R"({"points": [[0,0,0],[1,0,0],[0,1,0]], "normals": [[0,0,1],[0,0,1],[0,0,1]]})"
      "\n";
  std::istringstream in(text);
  const auto grasps = read_grasp_stream(in);
  REQUIRE(grasps.size() == 2);
  CHECK(grasps[0].fingers() == 4);
  CHECK_FALSE(grasps[0].with_normals());
  CHECK(grasps[1].fingers() == 3);
  CHECK(grasps[1].with_normals());

  std::istringstream bad("{\"normals\": []}\n");
  CHECK_THROWS_AS(read_grasp_stream(bad), ParseError);
}
