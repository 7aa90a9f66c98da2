#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "doslab/types.hpp"

namespace doslab {

// Gauss-Legendre nodes/weights on [-1, 1], Newton iteration on the
// three-term recurrence.  Exact for polynomials of degree <= 2n-1.
template <typename T = double>
void gauss_legendre(int n, VectorX<T>& x, VectorX<T>& w) {
  if (n < 1) throw ValidationError("bad-rule", "gauss_legendre needs n >= 1");
  x.resize(n);
  w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    T z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    T pp = 0;
    for (int it = 0; it < 100; ++it) {
      T p0 = 1, p1 = 0;
      for (int j = 0; j < n; ++j) {
        T p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
      }
      pp = n * (z * p0 - p1) / (z * z - 1);
      T dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

// Quadrature rule on a sphere |x - center| = radius in R^d.
// d = 2: equispaced angles, exact for trigonometric degree <= n_phi - 1.
// d = 3: Gauss-Legendre in cos(theta) x equispaced phi, exact for spherical
// polynomials of degree <= min(2 n_mu - 1, n_phi - 1).
template <typename T = double>
struct SphereRule {
  int dim = 0;
  T radius = 0;
  VectorX<T> center;       // size dim
  MatrixX<T> nodes;        // dim x count
  VectorX<T> weights;      // sums to area of the sphere
  int exact_degree = 0;    // largest polynomial degree integrated exactly

  int count() const { return static_cast<int>(weights.size()); }
};

template <typename T = double>
SphereRule<T> sphere_rule(int d, const VectorX<T>& center, T radius, int n_polar,
                          int n_azimuth = 0) {
  require_dim(d);
  if (radius <= 0) throw ValidationError("bad-rule", "sphere radius must be > 0");
  SphereRule<T> rule;
  rule.dim = d;
  rule.radius = radius;
  rule.center = center;
  if (d == 2) {
    const int n = n_polar;
    rule.nodes.resize(2, n);
    rule.weights.resize(n);
    for (int j = 0; j < n; ++j) {
      T th = 2 * kPi * j / n;
      rule.nodes(0, j) = center[0] + radius * std::cos(th);
      rule.nodes(1, j) = center[1] + radius * std::sin(th);
      rule.weights[j] = radius * 2 * kPi / n;
    }
    rule.exact_degree = n - 1;
  } else {
    const int nmu = n_polar;
    const int nph = n_azimuth > 0 ? n_azimuth : 2 * n_polar;
    VectorX<T> mu, wmu;
    gauss_legendre<T>(nmu, mu, wmu);
    rule.nodes.resize(3, nmu * nph);
    rule.weights.resize(nmu * nph);
    int idx = 0;
    for (int j = 0; j < nmu; ++j) {
      T c = mu[j], s = std::sqrt(std::max(T(0), 1 - c * c));
      for (int k = 0; k < nph; ++k) {
        T ph = 2 * kPi * k / nph;
        rule.nodes(0, idx) = center[0] + radius * s * std::cos(ph);
        rule.nodes(1, idx) = center[1] + radius * s * std::sin(ph);
        rule.nodes(2, idx) = center[2] + radius * c;
        rule.weights[idx] = radius * radius * wmu[j] * 2 * kPi / nph;
        ++idx;
      }
    }
    rule.exact_degree = std::min(2 * nmu - 1, nph - 1);
  }
  return rule;
}

// Integrate f over the sphere described by the rule.
template <typename T, typename F>
T sphere_integral(const SphereRule<T>& rule, F&& f) {
  T acc = 0;
  for (int j = 0; j < rule.count(); ++j) acc += rule.weights[j] * f(VectorX<T>(rule.nodes.col(j)));
  return acc;
}

// Product rule over the ball B(center, radius): Gauss-Legendre in radius
// (Jacobian rho^{d-1} folded into the weights) times a sphere rule in angle.
template <typename T = double>
struct BallRule {
  int dim = 0;
  T radius = 0;
  VectorX<T> center;
  MatrixX<T> nodes;    // dim x count
  VectorX<T> weights;  // sums to the ball volume
  int n_radial = 0, n_angular = 0;

  int count() const { return static_cast<int>(weights.size()); }
};

template <typename T = double>
BallRule<T> ball_rule(int d, const VectorX<T>& center, T radius, int n_radial,
                      int n_angular) {
  require_dim(d);
  if (radius <= 0) throw ValidationError("bad-rule", "ball radius must be > 0");
  VectorX<T> gx, gw;
  gauss_legendre<T>(n_radial, gx, gw);
  SphereRule<T> ang = sphere_rule<T>(d, VectorX<T>::Zero(d), T(1), n_angular);
  BallRule<T> rule;
  rule.dim = d;
  rule.radius = radius;
  rule.center = center;
  rule.n_radial = n_radial;
  rule.n_angular = n_angular;  // resolution parameter, not the node count
  rule.nodes.resize(d, n_radial * ang.count());
  rule.weights.resize(n_radial * ang.count());
  int idx = 0;
  for (int i = 0; i < n_radial; ++i) {
    T rho = radius * (gx[i] + 1) / 2;
    T wr = radius / 2 * gw[i] * std::pow(rho, d - 1);
    for (int j = 0; j < ang.count(); ++j) {
      rule.nodes.col(idx) = center + rho * ang.nodes.col(j);
      // ang weights carry the unit-sphere area element already.
      rule.weights[idx] = wr * ang.weights[j];
      ++idx;
    }
  }
  return rule;
}

// Integral of f(y) K(|x - y|) over the ball, in polar coordinates centered at
// the evaluation point x (must lie inside).  The rho^{d-1} Jacobian absorbs
// the |x - y|^{2-d} (or log) singularity of the kernel analytically.
// K is a radial kernel; pass K(t) = 1 for a plain integral.
template <typename T, typename F, typename K>
T polar_integral_at(int d, const VectorX<T>& center, T radius, const VectorX<T>& x,
                    F&& f, K&& kernel, int n_radial, int n_angular) {
  require_dim(d);
  VectorX<T> b = center - x;
  T beta2 = b.squaredNorm();
  if (beta2 >= radius * radius)
    throw ValidationError("point-outside-domain", "evaluation point not inside the ball");
  VectorX<T> gx, gw;
  gauss_legendre<T>(n_radial, gx, gw);
  SphereRule<T> ang = sphere_rule<T>(d, VectorX<T>::Zero(d), T(1), n_angular);
  T acc = 0;
  for (int j = 0; j < ang.count(); ++j) {
    VectorX<T> omega = ang.nodes.col(j);
    T bo = b.dot(omega);
    T rho_max = bo + std::sqrt(std::max(T(0), radius * radius - beta2 + bo * bo));
    if (rho_max <= 0) continue;
    T dir = 0;
    for (int i = 0; i < n_radial; ++i) {
      T rho = rho_max * (gx[i] + 1) / 2;
      T w = rho_max / 2 * gw[i] * std::pow(rho, d - 1);
      dir += w * kernel(rho) * f(VectorX<T>(x + rho * omega));
    }
    acc += ang.weights[j] * dir;
  }
  return acc;
}

}  // namespace doslab
