#pragma once

#include <cstddef>

#include "edgehml/core.hpp"

namespace edgehml {

// Piecewise-cosine weight on the unsupervised term: zero before `onset`,
// a half-cosine ramp up to `saturation`, then held at its final value.
struct ProgressiveSchedule {
  std::size_t onset = 0;       // v1
  std::size_t saturation = 0;  // v2
  double eta = -0.5;
  double xi = 0.5;
  std::size_t iters = 0;  // V

  static ProgressiveSchedule from(const Hyperparams& h);
};

double gamma(const ProgressiveSchedule& s, std::size_t v);

// Share of the V iterations in which the unsupervised term is computed.
double unsupervised_fraction(const ProgressiveSchedule& s);

}  // namespace edgehml
