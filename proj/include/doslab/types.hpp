#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>

#include "doslab/errors.hpp"

namespace doslab {

template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector2 = Eigen::Matrix<T, 2, 1>;
template <typename T>
using Vector3 = Eigen::Matrix<T, 3, 1>;

inline constexpr double kPi = std::numbers::pi;

// Volume of the unit ball and area of the unit sphere in R^d.
template <typename T = double>
T unit_ball_volume(int d) {
  switch (d) {
    case 1: return T(2);
    case 2: return T(kPi);
    case 3: return T(4.0 * kPi / 3.0);
    default: throw ValidationError("unsupported-dimension", "d must be 1, 2 or 3");
  }
}

template <typename T = double>
T unit_sphere_area(int d) {
  return T(d) * unit_ball_volume<T>(d);
}

inline void require_dim(int d, int lo = 2, int hi = 3) {
  if (d < lo || d > hi)
    throw ValidationError("unsupported-dimension",
                          "d = " + std::to_string(d) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

}  // namespace doslab
