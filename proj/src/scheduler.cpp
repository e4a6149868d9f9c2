#include <cmath>
#include <numbers>

#include "edgehml/scheduler.hpp"

namespace edgehml {

ProgressiveSchedule ProgressiveSchedule::from(const Hyperparams& h) {
  ProgressiveSchedule s;
  s.iters = h.iters_per_task;
  s.onset = resolve_fraction(h.v1_frac, s.iters);
  s.saturation = resolve_fraction(h.v2_frac, s.iters);
  s.eta = h.eta;
  s.xi = h.xi;
  if (s.onset > s.saturation || s.saturation > s.iters) throw ConfigError("schedule requires v1 <= v2 <= V");
  return s;
}

double gamma(const ProgressiveSchedule& s, std::size_t v) {
  if (v < s.onset) return 0.0;
  if (v < s.saturation) {
    const double phase = static_cast<double>(v - s.onset) / static_cast<double>(s.saturation - s.onset);
    return s.eta * std::cos(std::numbers::pi * phase) + s.xi;
  }
  return s.eta * std::cos(std::numbers::pi) + s.xi;
}

double unsupervised_fraction(const ProgressiveSchedule& s) {
  if (s.iters == 0) return 0.0;
  return static_cast<double>(s.iters - s.onset) / static_cast<double>(s.iters);
}

}  // namespace edgehml
