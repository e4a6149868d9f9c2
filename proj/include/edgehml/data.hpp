#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "edgehml/core.hpp"

namespace edgehml {

struct SynthSpec {
  std::size_t num_classes = 10;
  std::size_t feature_dim = 16;
  std::size_t tasks = 5;
  std::size_t classes_per_task = 2;
  std::size_t labels_per_class = 5;
  std::size_t unlabeled_per_class = 500;
  std::size_t test_per_class = 100;
  double cluster_separation = 3.0;
  std::uint64_t seed = 0;
};

void validate_synth_spec(const SynthSpec& spec);

// Returns false if key is not a SynthSpec field; throws SpecError on bad values.
bool set_synth_field(SynthSpec& spec, std::string_view key, std::string_view value);

// Isotropic unit-variance Gaussian clusters whose means are pairwise
// `cluster_separation` apart (exactly when D >= C).
TaskStream synth_stream(const SynthSpec& spec);

struct FeatureDataset {
  std::vector<LabeledSample> samples;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
};

// Text format: header "C D N", then N lines "label f_1 ... f_D".
FeatureDataset load_feature_dataset(const std::filesystem::path& path);
void save_feature_dataset(const FeatureDataset& ds, const std::filesystem::path& path);

struct SplitSpec {
  std::size_t tasks = 0;
  std::size_t classes_per_task = 0;
  std::size_t labels_per_class = 5;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

// Seeded class-to-task assignment; per class a held-out test split, and the
// labeled samples chosen from the rest (which all stay in the unlabeled set).
TaskStream split_tasks(const FeatureDataset& ds, const SplitSpec& spec);

}  // namespace edgehml
