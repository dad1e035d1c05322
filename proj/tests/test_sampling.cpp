#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <sstream>

#include "graspkit/mesh.hpp"
#include "graspkit/sampling.hpp"
#include "test_util.hpp"

using namespace graspkit;

namespace {

ContactCandidateSet sphere_contacts(int subdiv = 2) {
  return mesh_to_contacts(generate_primitive(PrimitiveKind::sphere, {1, 0, 0}, subdiv));
}

}  // namespace

TEST_CASE("sample_grasp draws distinct candidates deterministically") {
  const auto contacts = sphere_contacts();
  SplitMix64 a(31), b(31);
  for (int t = 0; t < 50; ++t) {
    const Grasp ga = sample_grasp(contacts, 4, true, a);
    const Grasp gb = sample_grasp(contacts, 4, true, b);
    REQUIRE(ga.fingers() == 4);
    REQUIRE(ga.normals.size() == 4);
    for (int i = 0; i < 4; ++i) {
      CHECK(ga.points[i].x == gb.points[i].x);
      CHECK(ga.points[i].y == gb.points[i].y);
      CHECK(ga.points[i].z == gb.points[i].z);
      for (int j = i + 1; j < 4; ++j)
        CHECK(distance(ga.points[i], ga.points[j]) > 1e-9);
    }
    CHECK(grasp_parameterizable(ga));
  }
}

TEST_CASE("sample_grasp error paths") {
  ContactCandidateSet tiny;
  tiny.entries = {{{0, 0, 0}, {0, 0, 1}}, {{1, 0, 0}, {0, 0, 1}}};
  SplitMix64 rng(1);
  CHECK_THROWS_AS(sample_grasp(tiny, 3, false, rng), TooFewCandidates);

  // a flat plate: every spatial quadruple is coplanar
  ContactCandidateSet plate;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      plate.entries.push_back({{static_cast<double>(i), static_cast<double>(j), 0},
                               {0, 0, 1}});
  CHECK_THROWS_AS(sample_grasp(plate, 4, false, rng), PersistentDegeneracy);
  // three fingers on the plate are fine (triangles span the plane)
  CHECK_NOTHROW(sample_grasp(plate, 3, false, rng));
}

TEST_CASE("single-draw uniformity within 5 sigma") {
  const auto contacts = sphere_contacts();  // 320 candidates
  const std::uint64_t k = contacts.size();
  const int draws = 1000000;
  std::vector<int> count(k, 0);
  SplitMix64 rng(77);
  for (int i = 0; i < draws; ++i) ++count[rng.next_below(k)];
  const double p = 1.0 / static_cast<double>(k);
  const double sigma = std::sqrt(p * (1 - p) / draws);
  for (std::uint64_t c = 0; c < k; ++c) {
    const double freq = static_cast<double>(count[c]) / draws;
    CHECK(std::fabs(freq - p) < 5 * sigma);
  }
}

TEST_CASE("z combinations") {
  SplitMix64 rng(5);
  const Grasp g = testutil::random_valid_grasp(rng, 7, true);

  CHECK(binomial(4, 3) == 4);
  CHECK(binomial(5, 3) == 10);
  CHECK(binomial(6, 3) == 20);
  CHECK(binomial(7, 3) == 35);
  CHECK(binomial(5, 4) == 5);
  CHECK(binomial(6, 4) == 15);
  CHECK(binomial(7, 4) == 35);

  const auto subs = z_combinations(g, 3);
  CHECK(subs.size() == 35);
  std::set<std::vector<double>> unique;
  for (const auto& s : subs) {
    REQUIRE(s.fingers() == 3);
    REQUIRE(s.normals.size() == 3);
    unique.insert({s.points[0].x, s.points[1].x, s.points[2].x});
  }
  CHECK(unique.size() == 35);

  const auto all = z_combinations(g, 7);
  REQUIRE(all.size() == 1);  // z = n is the grasp itself
  for (int i = 0; i < 7; ++i)
    CHECK(distance(all[0].points[i], g.points[i]) == 0);

  CHECK_THROWS_AS(z_combinations(g, 2), InvalidZ);
  CHECK_THROWS_AS(z_combinations(g, 8), InvalidZ);
}

TEST_CASE("sample_z_combinations") {
  SplitMix64 rng(6);
  const Grasp g = testutil::random_valid_grasp(rng, 7, false);
  SplitMix64 ra(9), rb(9);
  const auto a = sample_z_combinations(g, 3, 4, ra);
  const auto b = sample_z_combinations(g, 3, 4, rb);
  REQUIRE(a.size() == 4);
  for (size_t i = 0; i < a.size(); ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(distance(a[i].points[c], b[i].points[c]) == 0);

  SplitMix64 rc(10);
  const auto exhaustive = sample_z_combinations(g, 3, 35, rc);
  std::set<std::vector<double>> unique;
  for (const auto& s : exhaustive)
    unique.insert({s.points[0].x, s.points[1].x, s.points[2].x});
  CHECK(unique.size() == 35);

  CHECK_THROWS_AS(sample_z_combinations(g, 3, 36, rc), InvalidK);
  CHECK_THROWS_AS(sample_z_combinations(g, 3, 0, rc), InvalidK);
}

TEST_CASE("incomplete grasp policies match their distributions") {
  const auto p4 = incomplete_policy_4();
  const auto p5 = incomplete_policy_5();
  p4.validate(4);
  p5.validate(5);

  SplitMix64 rng(123);
  const int draws = 100000;
  std::map<int, int> c4, c5;
  for (int i = 0; i < draws; ++i) ++c4[p4.draw(rng)];
  for (int i = 0; i < draws; ++i) ++c5[p5.draw(rng)];
  CHECK(static_cast<double>(c4[3]) / draws == doctest::Approx(0.4).epsilon(0.025));
  CHECK(static_cast<double>(c4[4]) / draws == doctest::Approx(0.6).epsilon(0.025));
  CHECK(static_cast<double>(c5[3]) / draws == doctest::Approx(0.2).epsilon(0.05));
  CHECK(static_cast<double>(c5[4]) / draws == doctest::Approx(0.3).epsilon(0.05));
  CHECK(static_cast<double>(c5[5]) / draws == doctest::Approx(0.5).epsilon(0.025));

  // point-mass policy always yields full grasps
  const IncompleteGraspPolicy full{{{5, 1.0}}};
  const auto contacts = sphere_contacts();
  SplitMix64 rng2(3);
  for (int i = 0; i < 20; ++i)
    CHECK(sample_incomplete(contacts, full, 5, false, rng2).fingers() == 5);

  IncompleteGraspPolicy bad{{{2, 0.5}, {4, 0.5}}};
  CHECK_THROWS_AS(bad.validate(4), Error);
  IncompleteGraspPolicy off{{{3, 0.5}, {4, 0.6}}};
  CHECK_THROWS_AS(off.validate(4), Error);
}

TEST_CASE("generate_dataset shapes, counts and per-class partition") {
  const std::vector<ContactCandidateSet> objects = {sphere_contacts(1),
                                                    sphere_contacts(2)};
  DatasetOptions opt;
  opt.fingers = 4;
  opt.per_class = 50;
  opt.with_normals = true;
  opt.seed = 17;
  const auto ds = generate_dataset(objects, {"a", "b"}, opt);
  REQUIRE(ds.size() == 100);
  CHECK(ds.rows[0].size() == 14);
  CHECK(ds.indices_of_class(0).size() == 50);
  CHECK(ds.indices_of_class(1).size() == 50);
  for (size_t i = 0; i < ds.size(); ++i)
    CHECK(ds.labels[i] == (i < 50 ? 0 : 1));
}

TEST_CASE("dataset generation is deterministic and worker-invariant") {
  const std::vector<ContactCandidateSet> objects = {sphere_contacts(1),
                                                    sphere_contacts(2)};
  DatasetOptions opt;
  opt.fingers = 4;
  opt.per_class = 60;
  opt.with_normals = true;
  opt.sigma = 0.02;
  opt.seed = 99;
  opt.workers = 1;
  const auto a = generate_dataset(objects, {"a", "b"}, opt);
  opt.workers = 4;
  const auto b = generate_dataset(objects, {"a", "b"}, opt);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a.labels[i] == b.labels[i]);
    for (size_t j = 0; j < a.rows[i].size(); ++j) CHECK(a.rows[i][j] == b.rows[i][j]);
  }

  std::ostringstream sa, sb;
  save_dataset(a, sa);
  save_dataset(b, sb);
  CHECK(testutil::fnv1a(sa.str()) == testutil::fnv1a(sb.str()));
}

TEST_CASE("normalized dataset is invariant to object scale on matched seeds") {
  const auto base = generate_primitive(PrimitiveKind::sphere, {1, 0, 0}, 2);
  const auto big = scale_mesh(base, 2, 2, 2);
  DatasetOptions opt;
  opt.fingers = 4;
  opt.per_class = 80;
  opt.with_normals = true;
  opt.normalize = true;
  opt.seed = 7;
  const auto a = generate_dataset({mesh_to_contacts(base)}, {"s"}, opt);
  const auto b = generate_dataset({mesh_to_contacts(big)}, {"s"}, opt);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a.rows[i].size(); ++j)
      CHECK(a.rows[i][j] == doctest::Approx(b.rows[i][j]).epsilon(1e-8));
}

TEST_CASE("dataset save/load round-trip with metadata validation") {
  const std::vector<ContactCandidateSet> objects = {sphere_contacts(1)};
  DatasetOptions opt;
  opt.fingers = 5;
  opt.per_class = 30;
  opt.with_normals = false;
  opt.seed = 5;
  const auto ds = generate_dataset(objects, {"obj"}, opt);
  std::ostringstream out;
  save_dataset(ds, out);
  std::istringstream in(out.str());
  const auto back = load_dataset(in);
  CHECK(back.shape == ds.shape);
  CHECK(back.meta.class_names == ds.meta.class_names);
  CHECK(back.meta.seed == ds.meta.seed);
  CHECK(back.meta.per_class == ds.meta.per_class);
  REQUIRE(back.size() == ds.size());
  for (size_t i = 0; i < ds.size(); ++i)
    for (size_t j = 0; j < ds.rows[i].size(); ++j)
      CHECK(back.rows[i][j] == ds.rows[i][j]);

  std::istringstream junk("not a dataset\n");
  CHECK_THROWS_AS(load_dataset(junk), ParseError);
}

TEST_CASE("validation split is deterministic and per-class") {
  const std::vector<ContactCandidateSet> objects = {sphere_contacts(1),
                                                    sphere_contacts(2)};
  DatasetOptions opt;
  opt.fingers = 4;
  opt.per_class = 100;
  opt.seed = 21;
  const auto ds = generate_dataset(objects, {"a", "b"}, opt);
  const auto s1 = validation_split(ds, 0.15);
  const auto s2 = validation_split(ds, 0.15);
  CHECK(s1.train == s2.train);
  CHECK(s1.validation == s2.validation);
  CHECK(s1.validation.size() == 30);  // 15% of each class
  CHECK(s1.train.size() + s1.validation.size() == ds.size());
  int val_a = 0;
  for (size_t i : s1.validation) val_a += ds.labels[i] == 0;
  CHECK(val_a == 15);
}

TEST_CASE("vectors in generated datasets satisfy range invariants") {
  const std::vector<ContactCandidateSet> objects = {sphere_contacts(2)};
  DatasetOptions opt;
  opt.fingers = 5;
  opt.per_class = 200;
  opt.with_normals = true;
  opt.seed = 404;
  const auto ds = generate_dataset(objects, {"o"}, opt);
  const auto kinds = component_kinds(ds.shape);
  for (const auto& row : ds.rows)
    for (size_t i = 0; i < row.size(); ++i) {
      REQUIRE(std::isfinite(row[i]));
      if (kinds[i] == ComponentKind::interior_angle) {
        REQUIRE(row[i] > 0);
        REQUIRE(row[i] < kPi);
      } else if (kinds[i] == ComponentKind::length) {
        REQUIRE(row[i] > 0);
      }
    }
}
