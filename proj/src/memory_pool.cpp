#include <numeric>
#include <string>

#include "edgehml/memory_pool.hpp"

namespace edgehml {

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  k = std::min(k, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k positions end up uniform without replacement.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

MemoryPool::MemoryPool(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw CapacityError("memory pool capacity must be >= 1");
  labeled_.reserve(capacity_);
}

InsertOutcome MemoryPool::insert_labeled(const LabeledSample& s, Rng& rng) {
  ++seen_labeled_;
  if (labeled_.size() < capacity_) {
    if (size() + 1 > capacity_) {
      const std::size_t victim = uniform_index(rng, unlabeled_.size());
      unlabeled_[victim] = std::move(unlabeled_.back());
      unlabeled_.pop_back();
    }
    labeled_.push_back(s);
    return Stored{labeled_.size() - 1};
  }
  // Algorithm R: keep the n-th offer with probability capacity / n.
  const std::size_t j = uniform_index(rng, seen_labeled_);
  if (j < capacity_) {
    labeled_[j] = s;
    return Stored{j};
  }
  return Discarded{};
}

std::size_t MemoryPool::refill_unlabeled(std::vector<PseudoLabeledSample> samples) {
  if (samples.size() > free_unlabeled_slots())
    throw CapacityError("refill of " + std::to_string(samples.size()) + " exceeds free capacity " +
                        std::to_string(free_unlabeled_slots()));
  unlabeled_ = std::move(samples);
  return unlabeled_.size();
}

ReplayBatch MemoryPool::sample_replay_batch(std::size_t k_lab, std::size_t k_unlab, Rng& rng) const {
  ReplayBatch out;
  for (std::size_t i : sample_without_replacement(labeled_.size(), k_lab, rng)) out.labeled.push_back(labeled_[i]);
  for (std::size_t i : sample_without_replacement(unlabeled_.size(), k_unlab, rng))
    out.unlabeled.push_back(unlabeled_[i]);
  return out;
}

bool MemoryPool::invariants_hold() const {
  return labeled_.size() + unlabeled_.size() <= capacity_ && seen_labeled_ >= labeled_.size();
}

}  // namespace edgehml
