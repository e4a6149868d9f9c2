#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "edgehml/core.hpp"
#include "edgehml/data.hpp"
#include "edgehml/trainer.hpp"

namespace edgehml::cli {

struct RunSpec {
  std::filesystem::path config;
  std::vector<std::string> overrides;  // key=value, applied after the config file
  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out = "results";
  std::filesystem::path dataset;  // empty: synthetic stream
  std::vector<std::string> axes;  // NAME=V1,V2,... (sweep only)
  std::size_t jobs = 1;
};

// Everything a run needs after config + overrides are resolved.
struct Experiment {
  Hyperparams h;
  SynthSpec synth;
  double test_fraction = 0.2;  // only used with --dataset
};

Experiment resolve(const RunSpec& spec);
void apply_setting(Experiment& e, std::string_view key, std::string_view value);

struct AxisPoint {
  std::string label;
  std::vector<std::pair<std::string, std::string>> settings;
};
struct Axis {
  std::string name;
  std::vector<AxisPoint> points;
};
Axis parse_axis(std::string_view text, const Experiment& base);

int cmd_run(const RunSpec& spec, std::ostream& out);
int cmd_sweep(const RunSpec& spec, std::ostream& out);
int cmd_inspect_pool(const std::filesystem::path& pool, std::size_t num_classes, std::ostream& out);

}  // namespace edgehml::cli
