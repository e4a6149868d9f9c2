#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "edgehml/detail/binary_io.hpp"
#include "edgehml/disk_pool.hpp"
#include "edgehml/errors.hpp"

namespace edgehml::cli {
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<std::string, std::string> split_kv(std::string_view kv) {
  const auto eq = kv.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ConfigError("expected KEY=VALUE, got '" + std::string(kv) + "'");
  return {std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1))};
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = std::min(s.find(sep, start), s.size());
    if (end > start) out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

std::string run_name(std::string_view variant, std::uint64_t seed) {
  return std::string(variant) + "_seed" + std::to_string(seed);
}

class StreamSource {
 public:
  explicit StreamSource(const RunSpec& spec) {
    if (!spec.dataset.empty()) dataset_ = load_feature_dataset(spec.dataset);
  }

  TaskStream build(const Experiment& e, std::uint64_t seed) const {
    if (!dataset_) {
      SynthSpec s = e.synth;
      s.seed = seed;
      return synth_stream(s);
    }
    return split_tasks(*dataset_,
                       {e.synth.tasks, e.synth.classes_per_task, e.synth.labels_per_class, e.test_fraction, seed});
  }

 private:
  std::optional<FeatureDataset> dataset_;
};

RunReport run_one(const StreamSource& src, Experiment e, Variant v, std::uint64_t seed, const fs::path& pool) {
  e.h.seed = seed;
  RunOptions opts;
  if (Components::of(v).disk) opts.pool_path = pool;
  spdlog::info("run {} seed {}", to_string(v), seed);
  return run_stream(src.build(e, seed), e.h, v, opts);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + p.string());
}

// Opens a results CSV for appending, writing the version and column lines when it is new.
std::ofstream open_csv(const fs::path& p, std::string_view prefix_columns) {
  const bool fresh = !fs::exists(p) || fs::file_size(p) == 0;
  std::ofstream out(p, std::ios::app);
  if (!out) throw IoError("cannot open " + p.string());
  if (fresh) out << kCsvVersionLine << '\n' << prefix_columns << kCsvColumns << '\n';
  return out;
}

std::vector<Variant> variants_of(const RunSpec& spec, std::vector<Variant> fallback) {
  if (spec.variants.empty()) return fallback;
  std::vector<Variant> out;
  for (const auto& v : spec.variants) out.push_back(parse_variant(v));
  return out;
}

}  // namespace

void apply_setting(Experiment& e, std::string_view key, std::string_view value) {
  if (key == "test_fraction") {
    e.test_fraction = parse_double(key, value);
    return;
  }
  if (set_hyperparam(e.h, key, value)) return;
  try {
    if (set_synth_field(e.synth, key, value)) return;
  } catch (const SpecError& err) {
    throw ConfigError(err.what());
  }
  throw ConfigError("unknown setting: " + std::string(key));
}

Experiment resolve(const RunSpec& spec) {
  Experiment e;
  if (!spec.config.empty())
    for (const auto& [k, v] : parse_key_values(read_text(spec.config))) apply_setting(e, k, v);
  for (const auto& kv : spec.overrides) {
    const auto [k, v] = split_kv(kv);
    apply_setting(e, k, v);
  }
  return e;
}

Axis parse_axis(std::string_view text, const Experiment& base) {
  const auto [name, values] = split_kv(text);
  Axis axis{name, {}};
  for (const auto& v : split(values, ',')) {
    AxisPoint p{v, {}};
    if (name == "labels_per_class") {
      p.settings = {{"labels_per_class", v}};
    } else if (name == "capacity") {
      const auto parts = split(v, '+');
      if (parts.size() != 2) throw ConfigError("capacity values look like MEM+DISK, got '" + v + "'");
      p.settings = {{"mem_capacity", parts[0]}, {"disk_capacity", parts[1]}};
    } else if (name == "v1_frac") {
      // The ramp keeps its configured width and moves with the onset.
      const double v1 = parse_double(name, v);
      const double v2 = std::min(1.0, v1 + (base.h.v2_frac - base.h.v1_frac));
      p.settings = {{"v1_frac", v}, {"v2_frac", fmt_double(v2)}};
    } else {
      throw ConfigError("unknown sweep axis: " + name + " (labels_per_class, capacity, v1_frac)");
    }
    axis.points.push_back(std::move(p));
  }
  return axis;
}

int cmd_run(const RunSpec& spec, std::ostream& out) {
  const Experiment e = resolve(spec);
  const StreamSource src(spec);
  const auto seeds = spec.seeds.empty() ? std::vector<std::uint64_t>{e.h.seed} : spec.seeds;
  fs::create_directories(spec.out);
  auto csv = open_csv(spec.out / "results.csv", "");
  for (Variant v : variants_of(spec, {Variant::EdgeHml})) {
    for (auto seed : seeds) {
      const auto name = run_name(to_string(v), seed);
      const auto r = run_one(src, e, v, seed, spec.out / (name + ".pool"));
      write_file(spec.out / (name + ".json"), report_json(r, seed));
      csv << csv_row(r, seed) << '\n' << std::flush;
      out << name << ": average_accuracy " << r.average_accuracy << " unsup_fraction " << r.unsup_fraction
          << " iteration_time_s " << r.iteration_time_s << '\n';
    }
  }
  return 0;
}

int cmd_sweep(const RunSpec& spec, std::ostream& out) {
  const Experiment base = resolve(spec);
  if (spec.axes.size() != 1) throw ConfigError("sweep takes exactly one --axis");
  const Axis axis = parse_axis(spec.axes.front(), base);
  const StreamSource src(spec);
  const auto seeds = spec.seeds.empty() ? std::vector<std::uint64_t>{base.h.seed} : spec.seeds;
  const auto variants = variants_of(spec, {Variant::Sft, Variant::LabeledReplay, Variant::EdgeHml});

  struct Job {
    const AxisPoint* point;
    Variant variant;
    std::uint64_t seed;
    std::optional<RunReport> report;
    std::exception_ptr error;
  };
  std::vector<Job> jobs;
  for (const auto& p : axis.points)
    for (Variant v : variants)
      for (auto seed : seeds) jobs.push_back({&p, v, seed, std::nullopt, nullptr});

  fs::create_directories(spec.out);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      auto& job = jobs[i];
      try {
        Experiment e = base;
        for (const auto& [k, v] : job.point->settings) apply_setting(e, k, v);
        const auto name = axis.name + "-" + job.point->label + "_" + run_name(to_string(job.variant), job.seed);
        job.report = run_one(src, e, job.variant, job.seed, spec.out / (name + ".pool"));
        write_file(spec.out / (name + ".json"), report_json(*job.report, job.seed));
        fs::remove(spec.out / (name + ".pool"));
      } catch (...) {
        job.error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::max<std::size_t>(1, spec.jobs); ++w) pool.emplace_back(worker);
  }
  for (const auto& job : jobs)
    if (job.error) std::rethrow_exception(job.error);

  // Single writer, rows in job order so repeated sweeps produce identical files apart from timing.
  auto csv = open_csv(spec.out / "sweep.csv", "axis,value,");
  for (const auto& job : jobs) {
    csv << axis.name << ',' << job.point->label << ',' << csv_row(*job.report, job.seed) << '\n';
    out << axis.name << '=' << job.point->label << ' ' << run_name(to_string(job.variant), job.seed)
        << ": average_accuracy " << job.report->average_accuracy << '\n';
  }
  out << jobs.size() << " rows\n";
  return 0;
}

int cmd_inspect_pool(const fs::path& path, std::size_t num_classes, std::ostream& out) {
  const PoolHeader h = read_pool_header(path);
  const std::size_t rec = pool_record_size(h.dim);

  // Labels straight from the file, independent of the index rebuild below.
  std::vector<std::uint32_t> labels;
  {
    std::ifstream in(path, std::ios::binary);
    std::vector<std::uint8_t> buf(rec);
    for (std::size_t slot = 0; slot < h.count; ++slot) {
      in.seekg(static_cast<std::streamoff>(kPoolHeaderSize + slot * rec));
      if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(rec)))
        throw FormatError(path.string() + ": truncated at record " + std::to_string(slot));
      detail::ByteReader r(buf);
      r.skip(8);
      labels.push_back(r.get_uint<std::uint32_t>());
    }
  }
  if (num_classes == 0)
    num_classes = labels.empty() ? 1 : std::size_t{*std::max_element(labels.begin(), labels.end())} + 1;

  const auto pool = DiskPool::rebuild_index(path, h.capacity, num_classes);
  out << "file: " << path.string() << '\n'
      << "version: " << h.version << '\n'
      << "dim: " << h.dim << '\n'
      << "capacity: " << h.capacity << '\n'
      << "count: " << h.count << '\n'
      << "write_cursor: " << h.write_cursor << '\n'
      << "class_num:\n";
  for (std::size_t c = 0; c < pool.class_num().size(); ++c) out << "  " << c << ": " << pool.class_num()[c] << '\n';

  std::vector<std::size_t> recount(num_classes, 0);
  for (auto l : labels) ++recount[l];
  const auto& num = pool.class_num();
  const bool consistent = pool.count() == h.count && pool.write_cursor() == h.write_cursor && num == recount &&
                          std::accumulate(num.begin(), num.end(), std::size_t{0}) == pool.count();
  out << "rebuild: " << (consistent ? "consistent" : "INCONSISTENT") << '\n';
  return consistent ? 0 : 3;
}

}  // namespace edgehml::cli
