#include <algorithm>
#include <cassert>
#include <chrono>
#include <numeric>
#include <random>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "edgehml/trainer.hpp"

namespace edgehml {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Endless shuffled pass over [0, n): reshuffles at each wrap.
class Cycler {
 public:
  Cycler(std::size_t n, Rng& rng) : order_(n), rng_(rng) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }
  std::size_t next() {
    if (pos_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<std::size_t> order_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Sft: return "sft";
    case Variant::LabeledReplay: return "labeled-replay";
    case Variant::EdgeHml: return "edgehml";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "sft") return Variant::Sft;
  if (name == "labeled-replay") return Variant::LabeledReplay;
  if (name == "edgehml") return Variant::EdgeHml;
  throw ConfigError("unknown variant '" + std::string(name) + "' (sft | labeled-replay | edgehml)");
}

Components Components::of(Variant v) {
  switch (v) {
    case Variant::Sft: return {false, false, false};
    case Variant::LabeledReplay: return {true, false, false};
    case Variant::EdgeHml: return {true, true, true};
  }
  return {};
}

TrainerRngs TrainerRngs::from_seed(std::uint64_t seed) {
  return {substream(seed, "trainer.batches"), substream(seed, "memory_pool"), substream(seed, "disk.admission"),
          substream(seed, "offline")};
}

TaskMetrics train_task(Model& model, const Task& task, MemoryPool* mem, DiskPool* disk,
                       const ProgressiveSchedule& sched, const Hyperparams& h, Components parts, TrainerRngs& rngs) {
  const auto t0 = Clock::now();
  TaskMetrics m;
  m.task_id = task.task_id;
  if (sched.iters == 0) return m;
  if (task.labeled.empty()) throw EmptyBatch("task " + std::to_string(task.task_id) + " has no labeled samples");
  if (parts.replay && mem == nullptr) throw Error("train_task: replay requested without a memory pool");
  if (parts.disk && disk == nullptr) throw Error("train_task: admission requested without a disk pool");

  const bool draw_unlabeled = (parts.unsupervised || parts.disk) && !task.unlabeled.empty();
  Cycler labeled_order(task.labeled.size(), rngs.batches);
  std::optional<Cycler> unlabeled_order;
  if (draw_unlabeled) unlabeled_order.emplace(task.unlabeled.size(), rngs.batches);
  std::unordered_set<SampleId> offered;

  const std::size_t new_size = std::min(h.batch_new, task.labeled.size());
  std::vector<LabeledSample> new_batch;
  std::vector<Sample> unlab_batch;
  const auto lr = static_cast<double>(h.lr);

  for (std::size_t v = 0; v < sched.iters; ++v) {
    new_batch.clear();
    for (std::size_t i = 0; i < new_size; ++i) new_batch.push_back(task.labeled[labeled_order.next()]);

    ReplayBatch replay;
    if (parts.replay) replay = mem->sample_replay_batch(h.batch_replay, h.batch_replay, rngs.memory);

    unlab_batch.clear();
    if (draw_unlabeled)
      for (std::size_t i = 0; i < h.batch_unlabeled; ++i) unlab_batch.push_back(task.unlabeled[unlabeled_order->next()]);

    const bool in_window = parts.unsupervised && v >= sched.onset;
    const double g = parts.unsupervised ? gamma(sched, v) : 0.0;
    const std::span<const Sample> unsup_input =
        in_window ? std::span<const Sample>(unlab_batch) : std::span<const Sample>{};
    auto loss = total_loss<double>(model, new_batch, replay.labeled, replay.unlabeled, unsup_input, g, h, in_window);

    if (loss.unsup_forwards > 0) {
      ++m.unsup_iterations;
      m.unsup_forward_count += loss.unsup_forwards;
      m.confident_count += loss.confident_count;
      if (!m.first_unsup_iteration) m.first_unsup_iteration = v;
    }

    if (parts.disk && !unlab_batch.empty()) {
      MatrixX<double> probs;
      if (loss.unsup_forwards > 0) {
        probs = std::move(loss.unlab_probs);
      } else {
        std::vector<const FeatureVector*> ptrs;
        for (const auto& s : unlab_batch) ptrs.push_back(&s.features);
        probs = forward_batch(model, stack_features<double>(ptrs, model.input_dim())).probs;
        m.admission_forwards += unlab_batch.size();
      }
      for (std::size_t j = 0; j < unlab_batch.size(); ++j) {
        ++m.offered;
        const auto d = consider(unlab_batch[j], probs.col(static_cast<Eigen::Index>(j)), task.classes, h.tau,
                                h.p_admit, rngs.admission);
        if (const auto* a = std::get_if<Admitted>(&d)) {
          disk->append(a->sample);
          ++m.admitted;
        } else if (std::holds_alternative<RejectedLowConfidence>(d)) {
          ++m.rejected_low_confidence;
        } else if (std::holds_alternative<RejectedOutOfTask>(d)) {
          ++m.rejected_out_of_task;
        } else {
          ++m.rejected_by_coin;
        }
      }
    }

    sgd_step(model, loss.grad, lr);
    m.final_loss = loss.parts.total;
    ++m.iterations;

    if (parts.replay) {
      for (const auto& s : new_batch) {
        if (!offered.insert(s.sample.id).second) continue;
        ++m.labeled_offered;
        if (std::holds_alternative<Stored>(mem->insert_labeled(s, rngs.memory))) ++m.labeled_stored;
      }
    }
  }
  m.train_s = seconds_since(t0);
  return m;
}

std::vector<double> evaluate(const Model& model, std::span<const Task> tasks_seen, bool class_incremental) {
  std::vector<double> acc;
  acc.reserve(tasks_seen.size());
  for (const auto& task : tasks_seen) {
    if (task.test.empty()) throw EmptyTestSet("task " + std::to_string(task.task_id) + " has an empty test set");
    std::vector<const FeatureVector*> ptrs;
    for (const auto& s : task.test) ptrs.push_back(&s.sample.features);
    const auto probs = forward_batch(model, stack_features<double>(ptrs, model.input_dim())).probs;
    std::size_t correct = 0;
    for (std::size_t j = 0; j < task.test.size(); ++j) {
      const auto col = probs.col(static_cast<Eigen::Index>(j));
      ClassId pred = 0;
      if (class_incremental) {
        pred = detail::argmax_lowest<double>(col);
      } else {
        pred = task.classes.front();
        for (ClassId c : task.classes)
          if (col[c] > col[pred] || (col[c] == col[pred] && c < pred)) pred = c;
      }
      correct += pred == task.test[j].label;
    }
    acc.push_back(static_cast<double>(correct) / static_cast<double>(task.test.size()));
  }
  return acc;
}

double average_accuracy(const std::vector<std::vector<double>>& acc_matrix) {
  if (acc_matrix.empty() || acc_matrix.back().empty()) return 0.0;
  const auto& last = acc_matrix.back();
  return std::accumulate(last.begin(), last.end(), 0.0) / static_cast<double>(last.size());
}

RunReport run_stream(const TaskStream& stream, const Hyperparams& h_in, Variant variant, const RunOptions& opts) {
  const Hyperparams h = validate_config(h_in, meta_of(stream));
  const Components parts = Components::of(variant);
  const auto sched = ProgressiveSchedule::from(h);

  RunReport report;
  report.variant = variant;
  report.config_echo = h;

  Rng init_rng = substream(h.seed, "learner.init");
  Model model = make_mlp<double>(static_cast<Eigen::Index>(stream.feature_dim),
                                 static_cast<Eigen::Index>(h.hidden_units),
                                 static_cast<Eigen::Index>(stream.num_classes), init_rng);
  TrainerRngs rngs = TrainerRngs::from_seed(h.seed);

  std::optional<MemoryPool> mem;
  if (parts.replay) mem.emplace(h.mem_capacity);

  std::optional<DiskPool> disk;
  std::filesystem::path pool_path = opts.pool_path;
  const bool temp_pool = pool_path.empty();
  if (parts.disk) {
    if (temp_pool)
      pool_path = std::filesystem::temp_directory_path() /
                  ("edgehml-pool-" + std::to_string(h.seed) + "-" + std::to_string(std::random_device{}()) + ".bin");
    disk.emplace(DiskPool::create(pool_path, stream.feature_dim, h.disk_capacity, stream.num_classes));
  }

  for (std::size_t k = 0; k < stream.tasks.size(); ++k) {
    const Task& task = stream.tasks[k];
    auto metrics = train_task(model, task, mem ? &*mem : nullptr, disk ? &*disk : nullptr, sched, h, parts, rngs);
    report.iteration_time_s += metrics.train_s;
    report.unsup_iterations += metrics.unsup_iterations;
    report.unsup_forward_count += metrics.unsup_forward_count;
    report.total_iterations += metrics.iterations;

    report.acc_matrix.push_back(evaluate(model, std::span<const Task>(stream.tasks.data(), k + 1),
                                         h.class_incremental_eval));
    spdlog::debug("{} task {}: loss {:.4f}, admitted {}/{}, acc on task {:.3f}", to_string(variant), k,
                  metrics.final_loss, metrics.admitted, metrics.offered, report.acc_matrix.back().back());
    report.tasks.push_back(std::move(metrics));

    if (parts.disk && k + 1 < stream.tasks.size()) {
      auto off = run_offline_phase(model, *mem, *disk, rngs.offline);
      report.iteration_time_s += off.duration_s;
      report.per_task_offline_s.push_back(off.duration_s);
      spdlog::debug("offline after task {}: drew {}/{} in {:.4f}s", k, off.drawn, off.requested, off.duration_s);
      report.offline.push_back(std::move(off));
    }
    assert(!mem || mem->invariants_hold());
    assert(!disk || disk->invariants_hold());
  }

  report.average_accuracy = average_accuracy(report.acc_matrix);
  report.unsup_fraction = report.total_iterations == 0 ? 0.0
                                                       : static_cast<double>(report.unsup_iterations) /
                                                             static_cast<double>(report.total_iterations);
  if (disk) {
    disk->flush();
    report.disk_count = disk->count();
    report.disk_class_num = disk->class_num();
    disk.reset();
    if (temp_pool) std::filesystem::remove(pool_path);
  }
  if (opts.final_model) *opts.final_model = model;
  return report;
}

}  // namespace edgehml
