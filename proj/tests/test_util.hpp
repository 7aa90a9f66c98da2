#pragma once

#include <random>

#include "doslab/types.hpp"

namespace testutil {

using doslab::VectorX;

// All randomized tests draw from explicitly seeded engines so reruns are
// bit-identical.
inline std::mt19937_64 rng(unsigned long long seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(g);
}

inline VectorX<double> random_direction(std::mt19937_64& g, int d) {
  std::normal_distribution<double> n(0, 1);
  VectorX<double> v(d);
  for (int i = 0; i < d; ++i) v[i] = n(g);
  double s = v.norm();
  if (s == 0) { v.setZero(); v[0] = 1; s = 1; }
  return v / s;
}

inline VectorX<double> random_in_annulus(std::mt19937_64& g, int d, double r0, double r1) {
  return uniform(g, r0, r1) * random_direction(g, d);
}

inline VectorX<double> random_in_ball(std::mt19937_64& g, int d, double r) {
  // radius ~ r * u^{1/d} gives the uniform volume law
  double u = uniform(g, 0.0, 1.0);
  return r * std::pow(u, 1.0 / d) * random_direction(g, d);
}

}  // namespace testutil
