#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgehml/core.hpp"
#include "edgehml/disk_pool.hpp"
#include "edgehml/learner.hpp"
#include "edgehml/memory_pool.hpp"
#include "edgehml/offline_exchange.hpp"
#include "edgehml/scheduler.hpp"

namespace edgehml {

enum class Variant { Sft, LabeledReplay, EdgeHml };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);  // sft | labeled-replay | edgehml

// Which parts of the method a variant switches on.
struct Components {
  bool replay = false;        // memory-pool labeled replay
  bool disk = false;          // admission + disk pool + offline exchange
  bool unsupervised = false;  // scheduled L_u

  static Components of(Variant v);
};

struct TaskMetrics {
  std::size_t task_id = 0;
  std::size_t iterations = 0;
  std::size_t unsup_iterations = 0;     // iterations that computed L_u
  std::size_t unsup_forward_count = 0;  // samples forwarded for L_u
  std::optional<std::size_t> first_unsup_iteration;
  std::size_t confident_count = 0;
  std::size_t admission_forwards = 0;  // extra forwards for admission outside the L_u window
  std::size_t offered = 0;
  std::size_t admitted = 0;
  std::size_t rejected_low_confidence = 0;
  std::size_t rejected_out_of_task = 0;
  std::size_t rejected_by_coin = 0;
  std::size_t labeled_offered = 0;
  std::size_t labeled_stored = 0;
  double final_loss = 0.0;
  double train_s = 0.0;
};

struct RunReport {
  Variant variant = Variant::EdgeHml;
  // Row k holds a_t after finishing task k, for t = 0..k.
  std::vector<std::vector<double>> acc_matrix;
  double average_accuracy = 0.0;
  double unsup_fraction = 0.0;
  double iteration_time_s = 0.0;
  std::vector<double> per_task_offline_s;
  std::size_t unsup_forward_count = 0;
  std::size_t unsup_iterations = 0;
  std::size_t total_iterations = 0;
  std::vector<TaskMetrics> tasks;
  std::vector<OfflineReport> offline;
  std::size_t disk_count = 0;
  std::vector<std::size_t> disk_class_num;
  Hyperparams config_echo;
};

struct RunOptions {
  // Disk-pool file. Empty: a temporary file removed when the run ends.
  std::filesystem::path pool_path;
  // Receives the final model when set.
  Model* final_model = nullptr;
};

// Random streams used by one run, each derived from the seed by name.
struct TrainerRngs {
  Rng batches;
  Rng memory;
  Rng admission;
  Rng offline;

  static TrainerRngs from_seed(std::uint64_t seed);
};

TaskMetrics train_task(Model& model, const Task& task, MemoryPool* mem, DiskPool* disk,
                       const ProgressiveSchedule& sched, const Hyperparams& h, Components parts, TrainerRngs& rngs);

// Fraction of each task's test set classified correctly. Task-incremental by
// default: argmax restricted to the task's own classes.
std::vector<double> evaluate(const Model& model, std::span<const Task> tasks_seen, bool class_incremental = false);

// Mean of the final row of the accuracy matrix.
double average_accuracy(const std::vector<std::vector<double>>& acc_matrix);

RunReport run_stream(const TaskStream& stream, const Hyperparams& h, Variant variant, const RunOptions& opts = {});

// Serialization of reports.
std::string report_json(const RunReport& r, std::uint64_t seed);
inline constexpr std::string_view kCsvVersionLine = "# edgehml-results v1";
inline constexpr std::string_view kCsvColumns = "variant,seed,average_accuracy,unsup_fraction,iteration_time_s";
std::string csv_row(const RunReport& r, std::uint64_t seed);

}  // namespace edgehml
