#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/QR>

#include "edgehml/data.hpp"
#include "edgehml/rng.hpp"

namespace edgehml {

namespace {

std::vector<std::size_t> shuffled_range(std::size_t n, Rng& rng) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

Eigen::MatrixXd class_means(const SynthSpec& spec) {
  const auto d = static_cast<Eigen::Index>(spec.feature_dim);
  const auto c = static_cast<Eigen::Index>(spec.num_classes);
  Rng rng = substream(spec.seed, "data.means");
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd g(d, c);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n01(rng);

  Eigen::MatrixXd dirs(d, c);
  if (d >= c) {
    // Orthonormal directions: pairwise distance sqrt(2) before scaling.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    dirs = qr.householderQ() * Eigen::MatrixXd::Identity(d, c);
  } else {
    dirs = g.colwise().normalized();
  }
  return dirs * (spec.cluster_separation / std::sqrt(2.0));
}

Sample draw_sample(const Eigen::VectorXd& mean, SampleId id, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Sample s;
  s.id = id;
  s.features.resize(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) s.features[i] = static_cast<float>(mean[i] + n01(rng));
  return s;
}

std::size_t parse_size(std::string_view tok, const std::string& where) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size()) throw FormatError(where + ": expected integer, got '" + std::string(tok) + "'");
  return v;
}

float parse_float(std::string_view tok, const std::string& where) {
  float v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size() || !std::isfinite(v))
    throw FormatError(where + ": expected finite real, got '" + std::string(tok) + "'");
  return v;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

}  // namespace

void validate_synth_spec(const SynthSpec& s) {
  if (s.num_classes == 0 || s.feature_dim == 0) throw SpecError("num_classes and feature_dim must be >= 1");
  if (s.tasks == 0 || s.classes_per_task == 0) throw SpecError("tasks and classes_per_task must be >= 1");
  if (s.tasks * s.classes_per_task > s.num_classes) throw SpecError("tasks * classes_per_task exceeds num_classes");
  if (s.labels_per_class < 1) throw SpecError("labels_per_class must be >= 1");
  if (s.unlabeled_per_class < s.labels_per_class)
    throw SpecError("unlabeled_per_class must be >= labels_per_class (labeled samples are part of the unlabeled set)");
  if (s.test_per_class < 1) throw SpecError("test_per_class must be >= 1");
  if (!(s.cluster_separation > 0.0) || !std::isfinite(s.cluster_separation))
    throw SpecError("cluster_separation must be > 0");
}

bool set_synth_field(SynthSpec& s, std::string_view key, std::string_view value) {
  const std::string where = "synthetic spec key " + std::string(key);
  auto count = [&](std::size_t& dst) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size()) throw SpecError(where + ": expected integer");
    dst = v;
  };
  if (key == "num_classes") count(s.num_classes);
  else if (key == "feature_dim") count(s.feature_dim);
  else if (key == "tasks") count(s.tasks);
  else if (key == "classes_per_task") count(s.classes_per_task);
  else if (key == "labels_per_class") count(s.labels_per_class);
  else if (key == "unlabeled_per_class") count(s.unlabeled_per_class);
  else if (key == "test_per_class") count(s.test_per_class);
  else if (key == "cluster_separation") {
    double v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || p != value.data() + value.size()) throw SpecError(where + ": expected real");
    s.cluster_separation = v;
  } else {
    return false;
  }
  return true;
}

TaskStream synth_stream(const SynthSpec& spec) {
  validate_synth_spec(spec);
  const Eigen::MatrixXd means = class_means(spec);
  Rng order_rng = substream(spec.seed, "data.class_order");
  const auto order = shuffled_range(spec.num_classes, order_rng);

  TaskStream stream;
  stream.num_classes = spec.num_classes;
  stream.feature_dim = spec.feature_dim;
  for (std::size_t t = 0; t < spec.tasks; ++t) {
    Task task;
    task.task_id = t;
    for (std::size_t k = 0; k < spec.classes_per_task; ++k)
      task.classes.push_back(static_cast<ClassId>(order[t * spec.classes_per_task + k]));
    for (ClassId c : task.classes) {
      Rng rng = substream(spec.seed, "data.samples", c);
      const Eigen::VectorXd mean = means.col(static_cast<Eigen::Index>(c));
      const SampleId base = static_cast<SampleId>(c) << 32;
      for (std::size_t j = 0; j < spec.unlabeled_per_class; ++j) {
        task.unlabeled.push_back(draw_sample(mean, base | j, rng));
        if (j < spec.labels_per_class) task.labeled.push_back({task.unlabeled.back(), c});
      }
      const SampleId test_base = base | (SampleId{1} << 31);
      for (std::size_t j = 0; j < spec.test_per_class; ++j)
        task.test.push_back({draw_sample(mean, test_base | j, rng), c});
    }
    stream.tasks.push_back(std::move(task));
  }
  return stream;
}

FeatureDataset load_feature_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header line");
  const auto head = tokens(line);
  if (head.size() != 3) throw FormatError(path.string() + ":1: header must be 'C D N'");
  FeatureDataset ds;
  ds.num_classes = parse_size(head[0], path.string() + ":1");
  ds.feature_dim = parse_size(head[1], path.string() + ":1");
  const std::size_t n = parse_size(head[2], path.string() + ":1");
  if (ds.num_classes == 0 || ds.feature_dim == 0) throw FormatError(path.string() + ":1: C and D must be >= 1");
  ds.samples.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string where = path.string() + ":" + std::to_string(r + 2);
    if (!std::getline(in, line)) throw FormatError(where + ": expected " + std::to_string(n) + " records");
    const auto tok = tokens(line);
    if (tok.size() != ds.feature_dim + 1)
      throw FormatError(where + ": expected " + std::to_string(ds.feature_dim + 1) + " fields");
    LabeledSample s;
    const std::size_t label = parse_size(tok[0], where);
    if (label >= ds.num_classes) throw FormatError(where + ": label " + std::to_string(label) + " >= C");
    s.label = static_cast<ClassId>(label);
    s.sample.id = r;
    s.sample.features.resize(static_cast<Eigen::Index>(ds.feature_dim));
    for (std::size_t i = 0; i < ds.feature_dim; ++i)
      s.sample.features[static_cast<Eigen::Index>(i)] = parse_float(tok[i + 1], where);
    ds.samples.push_back(std::move(s));
  }
  while (std::getline(in, line))
    if (!tokens(line).empty()) throw FormatError(path.string() + ": trailing data after " + std::to_string(n) + " records");
  return ds;
}

void save_feature_dataset(const FeatureDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset " + path.string());
  out << ds.num_classes << ' ' << ds.feature_dim << ' ' << ds.samples.size() << '\n';
  char buf[32];
  for (const auto& s : ds.samples) {
    out << s.label;
    for (Eigen::Index i = 0; i < s.sample.features.size(); ++i) {
      // Shortest representation that round-trips to the same float.
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, s.sample.features[i]);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(p - buf));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for dataset " + path.string());
}

TaskStream split_tasks(const FeatureDataset& ds, const SplitSpec& spec) {
  if (spec.tasks == 0 || spec.classes_per_task == 0) throw SpecError("tasks and classes_per_task must be >= 1");
  if (spec.tasks * spec.classes_per_task > ds.num_classes)
    throw SpecError("tasks * classes_per_task exceeds the dataset's class count");
  if (spec.labels_per_class < 1) throw SpecError("labels_per_class must be >= 1");
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) throw SpecError("test_fraction must be in (0, 1)");

  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) by_class[ds.samples[i].label].push_back(i);

  Rng order_rng = substream(spec.seed, "split.class_order");
  const auto order = shuffled_range(ds.num_classes, order_rng);

  TaskStream stream;
  stream.num_classes = ds.num_classes;
  stream.feature_dim = ds.feature_dim;
  for (std::size_t t = 0; t < spec.tasks; ++t) {
    Task task;
    task.task_id = t;
    for (std::size_t k = 0; k < spec.classes_per_task; ++k)
      task.classes.push_back(static_cast<ClassId>(order[t * spec.classes_per_task + k]));
    for (ClassId c : task.classes) {
      auto members = by_class[c];
      const std::size_t n = members.size();
      const std::size_t n_test =
          std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(spec.test_fraction * double(n) + 0.5)));
      if (n < n_test + spec.labels_per_class)
        throw InsufficientData("class " + std::to_string(c) + " has " + std::to_string(n) + " samples; needs " +
                               std::to_string(n_test + spec.labels_per_class));
      Rng rng = substream(spec.seed, "split.samples", c);
      std::shuffle(members.begin(), members.end(), rng);
      for (std::size_t j = 0; j < n_test; ++j) task.test.push_back(ds.samples[members[j]]);
      for (std::size_t j = n_test; j < n; ++j) {
        const auto& s = ds.samples[members[j]];
        task.unlabeled.push_back(s.sample);
        if (j - n_test < spec.labels_per_class) task.labeled.push_back(s);
      }
    }
    stream.tasks.push_back(std::move(task));
  }
  return stream;
}

}  // namespace edgehml
