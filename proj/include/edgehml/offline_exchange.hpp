#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "edgehml/disk_pool.hpp"
#include "edgehml/learner.hpp"
#include "edgehml/memory_pool.hpp"

namespace edgehml {

struct ClassStats {
  std::vector<double> class_loss;
  std::vector<double> class_prob;
};

struct OfflineReport {
  std::vector<double> class_prob;
  std::vector<double> class_loss;
  std::size_t requested = 0;
  std::size_t drawn = 0;
  double duration_s = 0.0;
};

// Summed (not averaged) cross-entropy per class over the given labeled
// samples, evaluated without touching the model.
template <typename Scalar>
std::vector<double> class_losses(const Mlp<Scalar>& model, std::span<const LabeledSample> labeled,
                                 std::size_t num_classes) {
  if (static_cast<std::size_t>(model.num_classes()) != num_classes)
    throw ShapeError("class_losses: model output does not match class count");
  std::vector<double> loss(num_classes, 0.0);
  for (const auto& s : labeled) {
    if (s.label >= num_classes) throw ShapeError("class_losses: label out of range");
    loss[s.label] += static_cast<double>(cross_entropy(forward(model, s.sample.features), s.label));
  }
  return loss;
}

// Inverse pseudo-label frequency times normalized class loss, L1-normalized.
// Empty classes get 0; an all-zero loss falls back to inverse frequency; an
// empty disk pool yields all zeros.
std::vector<double> class_sampling_probs(std::span<const std::size_t> class_num, std::span<const double> class_loss);

// Between-task exchange: score classes on the memory pool's labeled samples,
// draw from the disk pool into the memory pool's free capacity.
OfflineReport run_offline_phase(const Model& model, MemoryPool& mem, DiskPool& disk, Rng& rng);

}  // namespace edgehml
