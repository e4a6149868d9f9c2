#include <doctest.h>

#include <cmath>
#include <numeric>

#include "edgehml/offline_exchange.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace edgehml;

namespace {

LabeledSample lab(SampleId id, ClassId c, std::size_t dim, Rng& rng) {
  return {Sample{id, oracle::random_features(dim, rng)}, c};
}

PseudoLabeledSample pseudo(SampleId id, ClassId c, std::size_t dim) {
  return {Sample{id, FeatureVector::Constant(static_cast<Eigen::Index>(dim), float(id))}, c, 0.99f};
}

}  // namespace

TEST_CASE("class_losses on trivial inputs") {
  const auto uniform = Mlp<double>::zeros(3, 4, 4);
  CHECK(class_losses(uniform, {}, 4) == std::vector<double>(4, 0.0));

  Rng rng(1);
  const std::vector<LabeledSample> one{lab(1, 2, 3, rng)};
  const auto loss = class_losses(uniform, one, 4);
  CHECK(loss[2] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(loss[0] == 0.0);
  CHECK(loss[1] == 0.0);
  CHECK(loss[3] == 0.0);
  CHECK_THROWS_AS(class_losses(uniform, one, 5), ShapeError);
}

TEST_CASE("class_losses equals per-sample scalar recomputation") {
  Rng rng(2);
  const auto model = make_mlp<double>(5, 7, 4, rng);
  std::vector<LabeledSample> pool;
  for (SampleId i = 0; i < 20; ++i) pool.push_back(lab(i, static_cast<ClassId>(uniform_index(rng, 4)), 5, rng));
  const auto got = class_losses(model, pool, 4);
  std::vector<double> expect(4, 0.0);
  for (const auto& s : pool) expect[s.label] += oracle::ce(model, s.sample.features, s.label);
  for (std::size_t c = 0; c < 4; ++c) CHECK(got[c] == doctest::Approx(expect[c]).epsilon(1e-10));
}

TEST_CASE("class_sampling_probs worked examples") {
  auto p = class_sampling_probs(std::vector<std::size_t>{10, 30}, std::vector<double>{2.0, 1.0});
  // raw = [40/10 * 2/3, 40/30 * 1/3] = [8/3, 4/9]
  CHECK(p[0] == doctest::Approx((8.0 / 3) / (8.0 / 3 + 4.0 / 9)).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.8571).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.1429).epsilon(1e-3));

  p = class_sampling_probs(std::vector<std::size_t>{5, 5}, std::vector<double>{1.0, 1.0});
  CHECK(p == std::vector<double>{0.5, 0.5});

  p = class_sampling_probs(std::vector<std::size_t>{0, 10}, std::vector<double>{3.0, 1.0});
  CHECK(p == std::vector<double>{0.0, 1.0});

  // all-zero loss falls back to inverse frequency
  p = class_sampling_probs(std::vector<std::size_t>{10, 30}, std::vector<double>{0.0, 0.0});
  CHECK(p[0] == doctest::Approx(0.75));
  // empty pool
  p = class_sampling_probs(std::vector<std::size_t>{0, 0}, std::vector<double>{1.0, 2.0});
  CHECK(p == std::vector<double>{0.0, 0.0});

  CHECK_THROWS_AS(class_sampling_probs(std::vector<std::size_t>{1}, std::vector<double>{1.0, 1.0}), ShapeError);
}

TEST_CASE("class_sampling_probs matches the literal oracle on random instances") {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t c = 1 + uniform_index(rng, 8);
    std::vector<std::size_t> num(c);
    std::vector<double> loss(c);
    for (std::size_t i = 0; i < c; ++i) {
      num[i] = bernoulli(rng, 0.25) ? 0 : uniform_index(rng, 100);
      loss[i] = bernoulli(rng, 0.25) ? 0.0 : uniform01(rng) * 5;
    }
    const auto got = class_sampling_probs(num, loss);
    const auto want = oracle::alg1_probs(num, loss);
    for (std::size_t i = 0; i < c; ++i) {
      CHECK(std::abs(got[i] - want[i]) <= 1e-9);
      if (num[i] == 0) CHECK(got[i] == 0.0);
    }
    const double sum = std::accumulate(got.begin(), got.end(), 0.0);
    if (std::accumulate(num.begin(), num.end(), std::size_t{0}) > 0) CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("run_offline_phase with an empty disk pool refills nothing") {
  TempDir dir;
  auto disk = DiskPool::create(dir / "d.bin", 3, 50, 4);
  MemoryPool mem(10);
  Rng rng(4);
  for (SampleId i = 0; i < 3; ++i) mem.insert_labeled(lab(i, 1, 3, rng), rng);
  const auto report = run_offline_phase(Mlp<double>::zeros(3, 4, 4), mem, disk, rng);
  CHECK(report.drawn == 0);
  CHECK(report.requested == 7);
  CHECK(report.class_prob == std::vector<double>(4, 0.0));
  CHECK(mem.unlabeled().empty());
  CHECK(disk.reads() == 0);
}

TEST_CASE("run_offline_phase with a full memory pool skips disk reads") {
  TempDir dir;
  auto disk = DiskPool::create(dir / "d.bin", 3, 50, 4);
  for (SampleId i = 0; i < 20; ++i) disk.append(pseudo(i, static_cast<ClassId>(i % 4), 3));
  MemoryPool mem(5);
  Rng rng(5);
  for (SampleId i = 0; i < 5; ++i) mem.insert_labeled(lab(100 + i, 0, 3, rng), rng);
  const auto report = run_offline_phase(Mlp<double>::zeros(3, 4, 4), mem, disk, rng);
  CHECK(report.requested == 0);
  CHECK(report.drawn == 0);
  CHECK(disk.reads() == 0);
}

TEST_CASE("run_offline_phase fills exactly the free capacity") {
  TempDir dir;
  auto disk = DiskPool::create(dir / "d.bin", 3, 500, 2);
  for (SampleId i = 0; i < 200; ++i) disk.append(pseudo(i, static_cast<ClassId>(i % 2), 3));
  MemoryPool mem(40);
  Rng rng(6);
  for (SampleId i = 0; i < 6; ++i) mem.insert_labeled(lab(1000 + i, static_cast<ClassId>(i % 2), 3, rng), rng);
  const auto report = run_offline_phase(Mlp<double>::zeros(3, 8, 2), mem, disk, rng);
  CHECK(report.drawn == 34);
  CHECK(mem.unlabeled().size() == 34);
  CHECK(mem.size() == mem.capacity());
  CHECK(report.class_prob[0] == doctest::Approx(0.5));
  CHECK(mem.invariants_hold());
  // header flushed: a rebuild sees the same count
  CHECK(DiskPool::rebuild_index(disk.path(), 500, 2).count() == 200);
}
