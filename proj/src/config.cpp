#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "edgehml/core.hpp"

namespace edgehml {

bool Task::owns(ClassId c) const { return std::find(classes.begin(), classes.end(), c) != classes.end(); }

std::size_t resolve_fraction(double frac, std::size_t iters) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(iters) + 0.5));
}

Hyperparams validate_config(const Hyperparams& h, const StreamMeta& meta) {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (!(h.tau > 0.0 && h.tau <= 1.0)) fail("tau out of range (0, 1]");
  if (!std::isfinite(h.alpha) || h.alpha < 0.0) fail("alpha must be finite and >= 0");
  if (!std::isfinite(h.beta) || h.beta < 0.0) fail("beta must be finite and >= 0");
  if (!std::isfinite(h.eta)) fail("eta must be finite");
  if (!std::isfinite(h.xi)) fail("xi must be finite");
  if (!(h.v1_frac >= 0.0 && h.v1_frac <= 1.0)) fail("v1_frac out of range [0, 1]");
  if (!(h.v2_frac >= 0.0 && h.v2_frac <= 1.0)) fail("v2_frac out of range [0, 1]");
  if (h.v1_frac > h.v2_frac) fail("v1>v2: v1_frac exceeds v2_frac");
  if (!(h.p_admit >= 0.0 && h.p_admit <= 1.0)) fail("p_admit out of range [0, 1]");
  if (!std::isfinite(h.lr) || h.lr < 0.0) fail("lr must be finite and >= 0");
  if (h.mem_capacity < 1) fail("mem_capacity must be >= 1");
  if (h.disk_capacity < h.mem_capacity) fail("disk_capacity must be >= mem_capacity");
  if (h.batch_new < 1) fail("batch_new must be >= 1");
  if (h.hidden_units < 1) fail("hidden_units must be >= 1");
  if (meta.num_classes < 1) fail("stream has no classes");
  if (meta.feature_dim < 1) fail("stream has zero feature dimension");
  if (meta.feature_dim > 0xffff) fail("feature_dim exceeds the pool format limit 65535");
  const std::size_t v = h.iters_per_task;
  const std::size_t v1 = resolve_fraction(h.v1_frac, v);
  const std::size_t v2 = resolve_fraction(h.v2_frac, v);
  if (!(v1 <= v2 && v2 <= v)) fail("resolved v1 <= v2 <= V violated");
  return h;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("bad real value for " + std::string(key));
  return out;
}

std::uint64_t parse_count(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("bad integer value for " + std::string(key));
  return out;
}

bool parse_flag(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean value for " + std::string(key));
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(std::string(key), std::string(value)).second)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + std::string(key));
  }
  return out;
}

bool set_hyperparam(Hyperparams& h, std::string_view key, std::string_view value) {
  if (key == "tau") h.tau = parse_real(key, value);
  else if (key == "alpha") h.alpha = parse_real(key, value);
  else if (key == "beta") h.beta = parse_real(key, value);
  else if (key == "eta") h.eta = parse_real(key, value);
  else if (key == "xi") h.xi = parse_real(key, value);
  else if (key == "v1_frac") h.v1_frac = parse_real(key, value);
  else if (key == "v2_frac") h.v2_frac = parse_real(key, value);
  else if (key == "p_admit") h.p_admit = parse_real(key, value);
  else if (key == "lr") h.lr = parse_real(key, value);
  else if (key == "mem_capacity") h.mem_capacity = parse_count(key, value);
  else if (key == "disk_capacity") h.disk_capacity = parse_count(key, value);
  else if (key == "iters_per_task") h.iters_per_task = parse_count(key, value);
  else if (key == "batch_new") h.batch_new = parse_count(key, value);
  else if (key == "batch_replay") h.batch_replay = parse_count(key, value);
  else if (key == "batch_unlabeled") h.batch_unlabeled = parse_count(key, value);
  else if (key == "hidden_units") h.hidden_units = parse_count(key, value);
  else if (key == "seed") h.seed = parse_count(key, value);
  else if (key == "relabel_replay") h.relabel_replay = parse_flag(key, value);
  else if (key == "class_incremental_eval") h.class_incremental_eval = parse_flag(key, value);
  else return false;
  return true;
}

Hyperparams parse_config(std::string_view text) {
  Hyperparams h;
  for (const auto& [k, v] : parse_key_values(text))
    if (!set_hyperparam(h, k, v)) throw ConfigError("unknown config key: " + k);
  return h;
}

Hyperparams load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const Hyperparams& h) {
  std::ostringstream o;
  o.precision(17);
  o << "tau = " << h.tau << "\nalpha = " << h.alpha << "\nbeta = " << h.beta << "\neta = " << h.eta
    << "\nxi = " << h.xi << "\nv1_frac = " << h.v1_frac << "\nv2_frac = " << h.v2_frac
    << "\np_admit = " << h.p_admit << "\nlr = " << h.lr << "\nmem_capacity = " << h.mem_capacity
    << "\ndisk_capacity = " << h.disk_capacity << "\niters_per_task = " << h.iters_per_task
    << "\nbatch_new = " << h.batch_new << "\nbatch_replay = " << h.batch_replay
    << "\nbatch_unlabeled = " << h.batch_unlabeled << "\nhidden_units = " << h.hidden_units
    << "\nseed = " << h.seed << "\nrelabel_replay = " << (h.relabel_replay ? "true" : "false")
    << "\nclass_incremental_eval = " << (h.class_incremental_eval ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace edgehml
