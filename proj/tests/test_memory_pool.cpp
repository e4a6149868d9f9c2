#include <doctest.h>

#include <algorithm>
#include <set>

#include "edgehml/memory_pool.hpp"

using namespace edgehml;

namespace {

LabeledSample lab(SampleId id, ClassId c = 0) {
  return {Sample{id, FeatureVector::Constant(2, static_cast<float>(id))}, c};
}

PseudoLabeledSample pseudo(SampleId id, ClassId c = 0) {
  return {Sample{id, FeatureVector::Constant(2, static_cast<float>(id))}, c, 0.97f};
}

std::vector<PseudoLabeledSample> pseudos(std::size_t n, SampleId base = 1000) {
  std::vector<PseudoLabeledSample> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(pseudo(base + i));
  return v;
}

std::vector<SampleId> ids(const MemoryPool& p) {
  std::vector<SampleId> out;
  for (const auto& s : p.labeled()) out.push_back(s.sample.id);
  for (const auto& s : p.unlabeled()) out.push_back(s.sample.id);
  return out;
}

}  // namespace

TEST_CASE("insert_labeled stores unconditionally while the labeled region has room") {
  MemoryPool pool(3);
  Rng rng(1);
  CHECK(std::get<Stored>(pool.insert_labeled(lab(1), rng)).slot == 0);
  CHECK(std::get<Stored>(pool.insert_labeled(lab(2), rng)).slot == 1);
  CHECK(std::get<Stored>(pool.insert_labeled(lab(3), rng)).slot == 2);
  CHECK(pool.seen_labeled() == 3);
  CHECK(pool.labeled().size() == 3);
}

TEST_CASE("labeled insertion evicts a random unlabeled entry when the pool is full") {
  MemoryPool pool(4);
  Rng rng(2);
  pool.insert_labeled(lab(1), rng);
  REQUIRE(pool.refill_unlabeled(pseudos(3)) == 3);
  CHECK(pool.size() == 4);
  pool.insert_labeled(lab(2), rng);
  CHECK(pool.size() == 4);
  CHECK(pool.labeled().size() == 2);
  CHECK(pool.unlabeled().size() == 2);
  CHECK(pool.invariants_hold());
}

TEST_CASE("the 4th labeled offer into capacity 3 is kept with probability 3/4") {
  std::size_t kept = 0;
  const std::size_t trials = 20000;
  for (std::size_t t = 0; t < trials; ++t) {
    MemoryPool pool(3);
    Rng rng(t);
    for (SampleId i = 0; i < 3; ++i) pool.insert_labeled(lab(i), rng);
    kept += std::holds_alternative<Stored>(pool.insert_labeled(lab(3), rng));
  }
  CHECK(double(kept) / trials == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("refill_unlabeled replaces the unlabeled region and respects free capacity") {
  MemoryPool pool(10);
  Rng rng(3);
  for (SampleId i = 0; i < 4; ++i) pool.insert_labeled(lab(i), rng);
  CHECK(pool.refill_unlabeled(pseudos(6, 100)) == 6);
  CHECK(pool.refill_unlabeled(pseudos(6, 200)) == 6);
  for (const auto& u : pool.unlabeled()) CHECK(u.sample.id >= 200);
  CHECK(pool.refill_unlabeled({}) == 0);
  CHECK(pool.unlabeled().empty());
  CHECK_THROWS_AS(pool.refill_unlabeled(pseudos(7)), CapacityError);
  CHECK(pool.labeled().size() == 4);
}

TEST_CASE("sample_replay_batch edge cases") {
  MemoryPool empty(5);
  Rng rng(4);
  auto b = empty.sample_replay_batch(3, 3, rng);
  CHECK(b.labeled.empty());
  CHECK(b.unlabeled.empty());

  MemoryPool pool(5);
  for (SampleId i = 0; i < 5; ++i) pool.insert_labeled(lab(i), rng);
  b = pool.sample_replay_batch(5, 2, rng);
  std::set<SampleId> got;
  for (const auto& s : b.labeled) got.insert(s.sample.id);
  CHECK(got == std::set<SampleId>{0, 1, 2, 3, 4});
  CHECK(b.unlabeled.empty());
  CHECK(pool.sample_replay_batch(50, 0, rng).labeled.size() == 5);
}

TEST_CASE("sample_replay_batch is uniform without replacement") {
  MemoryPool pool(100);
  Rng rng(5);
  for (SampleId i = 0; i < 100; ++i) pool.insert_labeled(lab(i), rng);
  std::vector<std::size_t> hits(100, 0);
  const std::size_t draws = 10000;
  for (std::size_t t = 0; t < draws; ++t) {
    const auto b = pool.sample_replay_batch(10, 0, rng);
    std::set<SampleId> distinct;
    for (const auto& s : b.labeled) {
      ++hits[s.sample.id];
      distinct.insert(s.sample.id);
    }
    REQUIRE(distinct.size() == 10);
  }
  for (auto h : hits) CHECK(double(h) / draws == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("random operation sequences preserve occupancy and never mutate on read") {
  Rng rng(6);
  for (int round = 0; round < 50; ++round) {
    const std::size_t cap = 1 + uniform_index(rng, 12);
    MemoryPool pool(cap);
    SampleId next = 0;
    for (int op = 0; op < 200; ++op) {
      const auto labeled_before = pool.labeled().size();
      switch (uniform_index(rng, 3)) {
        case 0:
          pool.insert_labeled(lab(next++), rng);
          break;
        case 1: {
          const auto n = uniform_index(rng, pool.free_unlabeled_slots() + 1);
          pool.refill_unlabeled(pseudos(n, 100000 + next));
          next += n;
          CHECK(pool.labeled().size() == labeled_before);
          break;
        }
        default: {
          const auto before = ids(pool);
          pool.sample_replay_batch(uniform_index(rng, 5), uniform_index(rng, 5), rng);
          CHECK(ids(pool) == before);
        }
      }
      REQUIRE(pool.invariants_hold());
      REQUIRE(pool.capacity() == cap);
    }
  }
}
