#pragma once

#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

#include "edgehml/core.hpp"
#include "edgehml/rng.hpp"

namespace edgehml {

struct Stored {
  std::size_t slot;
  bool operator==(const Stored&) const = default;
};
struct Discarded {
  bool operator==(const Discarded&) const = default;
};
using InsertOutcome = std::variant<Stored, Discarded>;

struct ReplayBatch {
  std::vector<LabeledSample> labeled;
  std::vector<PseudoLabeledSample> unlabeled;
};

// RAM tier. Labeled samples are reservoir-managed over every labeled sample
// ever offered; the unlabeled region is whatever capacity the labeled region
// leaves free and is replaced wholesale on refill.
class MemoryPool {
 public:
  explicit MemoryPool(std::size_t capacity);

  InsertOutcome insert_labeled(const LabeledSample& s, Rng& rng);
  std::size_t refill_unlabeled(std::vector<PseudoLabeledSample> samples);
  ReplayBatch sample_replay_batch(std::size_t k_lab, std::size_t k_unlab, Rng& rng) const;

  std::size_t capacity() const { return capacity_; }
  std::size_t seen_labeled() const { return seen_labeled_; }
  std::size_t size() const { return labeled_.size() + unlabeled_.size(); }
  std::size_t free_unlabeled_slots() const { return capacity_ - labeled_.size(); }
  const std::vector<LabeledSample>& labeled() const { return labeled_; }
  const std::vector<PseudoLabeledSample>& unlabeled() const { return unlabeled_; }

  bool invariants_hold() const;

 private:
  std::size_t capacity_;
  std::size_t seen_labeled_ = 0;
  std::vector<LabeledSample> labeled_;
  std::vector<PseudoLabeledSample> unlabeled_;
};

// k distinct indices from [0, n), uniformly, in random order (k clamped to n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace edgehml
