#pragma once

#include <cmath>

#include "cpsclp/instance.hpp"

namespace cpsclp::testing {

inline Instance small_instance(std::uint64_t seed, int nf, int nc, double radius = 14.0,
                               double covfrac = 0.5, double a = 0.01) {
  GeneratorParams p;
  p.seed = seed;
  p.n_facilities = nf;
  p.n_customers = nc;
  p.radius = radius;
  p.coverage_fraction = covfrac;
  p.costs.a = a;
  return generate(p);
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace cpsclp::testing
