#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cli.hpp"
#include "edgehml/errors.hpp"

namespace {

void add_common(CLI::App* cmd, edgehml::cli::RunSpec& spec) {
  cmd->add_option("--config", spec.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--override", spec.overrides, "KEY=VALUE applied after the config file (repeatable)");
  cmd->add_option("--variant", spec.variants, "sft | labeled-replay | edgehml (repeatable)");
  cmd->add_option("--seed", spec.seeds, "seed (repeatable)");
  cmd->add_option("--out", spec.out, "output directory");
  cmd->add_option("--dataset", spec.dataset, "feature dataset file instead of the synthetic stream")
      ->check(CLI::ExistingFile);
}

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("EDGEHML_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"EdgeHML semi-supervised continual learning experiments"};
  app.require_subcommand(1);

  edgehml::cli::RunSpec spec;
  auto* run = app.add_subcommand("run", "train on a stream, write JSON reports and CSV rows");
  add_common(run, spec);

  auto* sweep = app.add_subcommand("sweep", "cross product of one axis x seeds x variants into sweep.csv");
  add_common(sweep, spec);
  sweep->add_option("--axis", spec.axes, "NAME=V1,V2,... with NAME in labels_per_class, capacity, v1_frac")
      ->required();
  sweep->add_option("--jobs", spec.jobs, "parallel worker slots")->check(CLI::PositiveNumber);

  std::filesystem::path pool_path;
  std::size_t classes = 0;
  auto* inspect = app.add_subcommand("inspect-pool", "print a disk pool file's header and class histogram");
  inspect->add_option("pool", pool_path, "pool file")->required();
  inspect->add_option("--classes", classes, "number of classes (default: largest stored label + 1)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return edgehml::cli::cmd_run(spec, std::cout);
    if (*sweep) return edgehml::cli::cmd_sweep(spec, std::cout);
    return edgehml::cli::cmd_inspect_pool(pool_path, classes, std::cout);
  } catch (const edgehml::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
