#include <doctest.h>

#include <fstream>
#include <set>

#include "edgehml/data.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace edgehml;

namespace {

bool same_bits(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i])) return false;
  return true;
}

FeatureDataset random_dataset(std::size_t classes, std::size_t per_class, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  FeatureDataset ds{{}, classes, dim};
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t j = 0; j < per_class; ++j)
      ds.samples.push_back({Sample{ds.samples.size(), oracle::random_features(dim, rng, 10.0)}, static_cast<ClassId>(c)});
  return ds;
}

}  // namespace

TEST_CASE("synth_stream builds disjoint two-class tasks") {
  SynthSpec spec;
  spec.unlabeled_per_class = 50;
  spec.test_per_class = 10;
  spec.seed = 3;
  const auto stream = synth_stream(spec);
  REQUIRE(stream.tasks.size() == 5);
  std::set<ClassId> seen;
  for (const auto& t : stream.tasks) {
    CHECK(t.classes.size() == 2);
    CHECK(t.labeled.size() == 5 * 2);
    CHECK(t.unlabeled.size() == 50 * 2);
    CHECK(t.test.size() == 10 * 2);
    for (ClassId c : t.classes) {
      CHECK(c < 10);
      CHECK(seen.insert(c).second);
    }
    std::set<SampleId> unlabeled_ids, test_ids;
    for (const auto& u : t.unlabeled) unlabeled_ids.insert(u.id);
    for (const auto& s : t.test) test_ids.insert(s.sample.id);
    for (const auto& l : t.labeled) {
      CHECK(t.owns(l.label));
      CHECK(unlabeled_ids.count(l.sample.id) == 1);
      CHECK(test_ids.count(l.sample.id) == 0);
    }
    for (SampleId id : test_ids) CHECK(unlabeled_ids.count(id) == 0);
  }
}

TEST_CASE("synth_stream is deterministic and places means at the requested separation") {
  SynthSpec spec;
  spec.unlabeled_per_class = 2000;
  spec.test_per_class = 1;
  spec.seed = 11;
  const auto a = synth_stream(spec);
  const auto b = synth_stream(spec);
  for (std::size_t t = 0; t < a.tasks.size(); ++t)
    for (std::size_t i = 0; i < a.tasks[t].unlabeled.size(); ++i)
      REQUIRE(same_bits(a.tasks[t].unlabeled[i].features, b.tasks[t].unlabeled[i].features));

  // empirical class means within a task sit ~separation apart
  const auto& task = a.tasks[0];
  Eigen::VectorXd m0 = Eigen::VectorXd::Zero(16), m1 = Eigen::VectorXd::Zero(16);
  for (std::size_t i = 0; i < 2000; ++i) {
    m0 += task.unlabeled[i].features.cast<double>();
    m1 += task.unlabeled[2000 + i].features.cast<double>();
  }
  CHECK((m0 - m1).norm() / 2000 == doctest::Approx(3.0).epsilon(0.05));

  spec.seed = 12;
  const auto c = synth_stream(spec);
  CHECK_FALSE(same_bits(c.tasks[0].unlabeled[0].features, a.tasks[0].unlabeled[0].features));
}

TEST_CASE("synth spec validation") {
  SynthSpec spec;
  spec.tasks = 6;
  CHECK_THROWS_AS(synth_stream(spec), SpecError);
  spec = {};
  spec.labels_per_class = 0;
  CHECK_THROWS_AS(synth_stream(spec), SpecError);
  spec = {};
  spec.cluster_separation = 0;
  CHECK_THROWS_AS(synth_stream(spec), SpecError);
  CHECK(set_synth_field(spec, "cluster_separation", "2.5"));
  CHECK(spec.cluster_separation == 2.5);
  CHECK_FALSE(set_synth_field(spec, "tau", "0.9"));
  CHECK_THROWS_AS(set_synth_field(spec, "tasks", "many"), SpecError);
}

TEST_CASE("feature dataset load and bit-exact round trip") {
  TempDir dir;
  {
    std::ofstream out(dir / "three.txt");
    out << "3 2 3\n0 1.5 -2\n2 0.25 1e-3\n1 3 4\n";
  }
  const auto ds = load_feature_dataset(dir / "three.txt");
  CHECK(ds.num_classes == 3);
  CHECK(ds.feature_dim == 2);
  REQUIRE(ds.samples.size() == 3);
  CHECK(ds.samples[1].label == 2);
  CHECK(ds.samples[1].sample.features[1] == 1e-3f);

  auto rand = random_dataset(4, 20, 7, 5);
  rand.samples[0].sample.features[0] = std::numeric_limits<float>::denorm_min();
  rand.samples[1].sample.features[0] = std::numeric_limits<float>::max();
  save_feature_dataset(rand, dir / "rt.txt");
  const auto back = load_feature_dataset(dir / "rt.txt");
  REQUIRE(back.samples.size() == rand.samples.size());
  for (std::size_t i = 0; i < back.samples.size(); ++i) {
    CHECK(back.samples[i].label == rand.samples[i].label);
    CHECK(same_bits(back.samples[i].sample.features, rand.samples[i].sample.features));
  }
}

TEST_CASE("feature dataset format errors carry the line number") {
  TempDir dir;
  auto write = [&](const std::string& text) {
    std::ofstream(dir / "bad.txt") << text;
    return dir / "bad.txt";
  };
  CHECK_THROWS_WITH_AS(load_feature_dataset(write("2 1 2\n0 1\n2 1\n")), doctest::Contains(":3"), FormatError);
  CHECK_THROWS_AS(load_feature_dataset(write("2 1\n")), FormatError);
  CHECK_THROWS_WITH_AS(load_feature_dataset(write("2 2 1\n0 1\n")), doctest::Contains(":2"), FormatError);
  CHECK_THROWS_AS(load_feature_dataset(write("2 1 2\n0 1\n")), FormatError);
  CHECK_THROWS_AS(load_feature_dataset(write("2 1 1\n0 nan\n")), FormatError);
  CHECK_THROWS_AS(load_feature_dataset(dir / "missing.txt"), IoError);
}

TEST_CASE("split_tasks covers classes disjointly and keeps tests apart") {
  const auto ds = random_dataset(100, 12, 3, 7);
  const auto stream = split_tasks(ds, {20, 5, 5, 0.2, 1});
  REQUIRE(stream.tasks.size() == 20);
  std::set<ClassId> all;
  std::set<SampleId> labeled_ids, test_ids;
  for (const auto& t : stream.tasks) {
    CHECK(t.classes.size() == 5);
    for (ClassId c : t.classes) CHECK(all.insert(c).second);
    CHECK(t.labeled.size() == 25);
    std::set<SampleId> unl;
    for (const auto& u : t.unlabeled) unl.insert(u.id);
    for (const auto& l : t.labeled) {
      labeled_ids.insert(l.sample.id);
      CHECK(unl.count(l.sample.id) == 1);
    }
    for (const auto& s : t.test) {
      test_ids.insert(s.sample.id);
      CHECK(unl.count(s.sample.id) == 0);
    }
  }
  CHECK(all.size() == 100);
  for (SampleId id : test_ids) CHECK(labeled_ids.count(id) == 0);

  const auto again = split_tasks(ds, {20, 5, 5, 0.2, 1});
  CHECK(again.tasks[3].classes == stream.tasks[3].classes);
  CHECK(again.tasks[3].labeled[0].sample.id == stream.tasks[3].labeled[0].sample.id);
}

TEST_CASE("split_tasks reports classes that are too small") {
  const auto ds = random_dataset(4, 6, 2, 8);
  CHECK_THROWS_WITH_AS(split_tasks(ds, {2, 2, 10, 0.2, 0}), doctest::Contains("class"), InsufficientData);
  CHECK_THROWS_AS(split_tasks(ds, {3, 2, 1, 0.2, 0}), SpecError);
}
