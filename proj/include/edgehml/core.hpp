#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "edgehml/errors.hpp"

namespace edgehml {

using ClassId = std::uint32_t;
using SampleId = std::uint64_t;

// Features are stored in single precision; that is also the on-disk width.
using FeatureVector = Eigen::VectorXf;

struct Sample {
  SampleId id = 0;
  FeatureVector features;
};

struct LabeledSample {
  Sample sample;
  ClassId label = 0;
};

struct PseudoLabeledSample {
  Sample sample;
  ClassId pseudo_label = 0;
  float confidence = 0.0f;
};

struct Task {
  std::size_t task_id = 0;
  std::vector<ClassId> classes;
  std::vector<LabeledSample> labeled;
  std::vector<Sample> unlabeled;
  std::vector<LabeledSample> test;

  bool owns(ClassId c) const;
};

struct TaskStream {
  std::vector<Task> tasks;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
};

struct StreamMeta {
  std::size_t tasks = 0;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
};

inline StreamMeta meta_of(const TaskStream& s) { return {s.tasks.size(), s.num_classes, s.feature_dim}; }

struct Hyperparams {
  double tau = 0.95;
  double alpha = 1.0;
  double beta = 0.1;
  double eta = -0.5;
  double xi = 0.5;
  double v1_frac = 0.20;
  double v2_frac = 0.30;
  double p_admit = 0.5;
  double lr = 0.03;
  std::size_t mem_capacity = 200;
  std::size_t disk_capacity = 10000;
  std::size_t iters_per_task = 100;
  std::size_t batch_new = 10;
  std::size_t batch_replay = 32;
  std::size_t batch_unlabeled = 32;
  std::size_t hidden_units = 32;
  std::uint64_t seed = 0;
  // Replay unlabeled samples against the live model's argmax instead of the
  // pseudo-label stored at admission.
  bool relabel_replay = false;
  // Evaluate with argmax over all C classes instead of the task's own.
  bool class_incremental_eval = false;

  bool operator==(const Hyperparams&) const = default;
};

// Resolves a fraction of V to an iteration index, rounding half up.
std::size_t resolve_fraction(double frac, std::size_t iters);

Hyperparams validate_config(const Hyperparams& h, const StreamMeta& meta);

// Flat `key = value` text. Blank lines and `#` comments are ignored.
std::map<std::string, std::string> parse_key_values(std::string_view text);

// Applies one key to h. Returns false if the key is not a Hyperparams field;
// throws ConfigError if the value does not parse.
bool set_hyperparam(Hyperparams& h, std::string_view key, std::string_view value);

Hyperparams parse_config(std::string_view text);
Hyperparams load_config(const std::filesystem::path& path);
std::string to_config_text(const Hyperparams& h);

}  // namespace edgehml
