#include <chrono>
#include <numeric>

#include "edgehml/offline_exchange.hpp"

namespace edgehml {

std::vector<double> class_sampling_probs(std::span<const std::size_t> class_num, std::span<const double> class_loss) {
  if (class_num.size() != class_loss.size()) throw ShapeError("class_num and class_loss differ in length");
  const std::size_t n = class_num.size();
  std::vector<double> prob(n, 0.0);
  const double total_num = static_cast<double>(std::accumulate(class_num.begin(), class_num.end(), std::size_t{0}));
  if (total_num == 0.0) return prob;
  const double total_loss = std::accumulate(class_loss.begin(), class_loss.end(), 0.0);

  double mass = 0.0;
  if (total_loss > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (class_num[i] == 0) continue;
      prob[i] = total_num / static_cast<double>(class_num[i]) * class_loss[i] / total_loss;
      mass += prob[i];
    }
  }
  if (!(mass > 0.0)) {
    mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = class_num[i] == 0 ? 0.0 : total_num / static_cast<double>(class_num[i]);
      mass += prob[i];
    }
  }
  for (auto& p : prob) p /= mass;
  return prob;
}

OfflineReport run_offline_phase(const Model& model, MemoryPool& mem, DiskPool& disk, Rng& rng) {
  const auto start = std::chrono::steady_clock::now();
  OfflineReport report;
  report.class_loss = class_losses(model, std::span<const LabeledSample>(mem.labeled()), disk.num_classes());
  report.class_prob = class_sampling_probs(disk.class_num(), report.class_loss);
  report.requested = mem.free_unlabeled_slots();
  std::vector<PseudoLabeledSample> drawn;
  if (report.requested > 0) drawn = disk.sample_by_class_prob(report.class_prob, report.requested, rng);
  report.drawn = mem.refill_unlabeled(std::move(drawn));
  disk.flush();
  report.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace edgehml
