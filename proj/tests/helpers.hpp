#pragma once

#include <cmath>
#include <random>

#include "contactflow/geometry.hpp"

namespace testing {

inline cflow::Vec vec(std::initializer_list<double> v) {
  cflow::Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) out(i++) = a;
  return out;
}

inline cflow::Vec uniform(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  cflow::Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

inline cflow::CanonicalPoint random_point(std::mt19937_64& rng, int n, double scale = 1.0) {
  return {uniform(rng, n, -scale, scale), uniform(rng, n, -scale, scale), uniform(rng, 1, -scale, scale)(0)};
}

}  // namespace testing
