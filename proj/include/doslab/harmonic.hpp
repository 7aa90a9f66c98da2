#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "doslab/quadrature.hpp"
#include "doslab/types.hpp"

namespace doslab {

// Degrees far beyond this overflow the scaled-Legendre recurrence; callers
// get a validation error instead of silent garbage.
inline constexpr int kMaxHarmonicDegree = 60;

// dim of the space of homogeneous harmonic polynomials of degree m in R^d.
inline int dim_component(int d, int m) {
  require_dim(d);
  if (m < 0) throw ValidationError("bad-degree", "degree must be >= 0");
  if (d == 2) return m == 0 ? 1 : 2;
  return 2 * m + 1;
}

// dim of the direct sum over degrees 0..N.
inline int dim_cumulative(int d, int N) {
  int acc = 0;
  for (int m = 0; m <= N; ++m) acc += dim_component(d, m);
  return acc;
}

// Counting constant gamma_d with dim_cumulative(d, N) <= gamma_d N^{d-1}, N >= 1.
inline int gamma_dim(int d) {
  require_dim(d);
  return d == 2 ? 3 : 4;
}

namespace detail {

// Scaled associated Legendre PT_m^k(c) = P_m^k(c) / (1-c^2)^{k/2}, no
// Condon-Shortley phase; a polynomial in c, stable on the whole interval.
template <typename T>
T scaled_assoc_legendre(int m, int k, T c) {
  T pkk = 1;
  for (int i = 1; i <= k; ++i) pkk *= 2 * i - 1;  // (2k-1)!!
  if (m == k) return pkk;
  T p0 = pkk;                      // PT_k^k
  T p1 = (2 * k + 1) * c * pkk;    // PT_{k+1}^k
  if (m == k + 1) return p1;
  for (int l = k + 2; l <= m; ++l) {
    T p2 = ((2 * l - 1) * c * p1 - (l + k - 1) * p0) / (l - k);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Schmidt semi-normalization sqrt((2 - delta_{k0}) (m-k)!/(m+k)!).
template <typename T>
T schmidt_factor(int m, int k) {
  T lg = T(0.5) * (std::lgamma(T(m - k + 1)) - std::lgamma(T(m + k + 1)));
  T f = std::exp(lg);
  return k == 0 ? f : T(std::numbers::sqrt2) * f;
}

}  // namespace detail

// Real solid harmonic basis element, homogeneous of degree m.
// d = 2, m >= 1: index 0 -> Re (x1 + i x2)^m, index 1 -> Im (x1 + i x2)^m.
// d = 3: index i in 0..2m, signed order k = i - m; k >= 0 -> cos branch,
// k < 0 -> sin branch, Schmidt semi-normalized so the unit-sphere norm
// squared is 4 pi / (2m+1) for every index.
template <typename T = double, typename Derived>
T solid_harmonic(int d, int m, int index, const Eigen::MatrixBase<Derived>& x) {
  require_dim(d);
  if (m < 0 || m > kMaxHarmonicDegree)
    throw ValidationError("bad-degree", "degree outside [0, 60]");
  if (index < 0 || index >= dim_component(d, m))
    throw ValidationError("bad-degree", "basis index out of range");
  if (x.size() != d)
    throw ValidationError("unsupported-dimension", "point size does not match d");
  if (m == 0) return T(1);
  if (d == 2) {
    std::complex<T> z(x[0], x[1]);
    std::complex<T> zm = std::pow(z, m);
    return index == 0 ? zm.real() : zm.imag();
  }
  const int k = index - m;
  const int ka = std::abs(k);
  T r2 = x.squaredNorm();
  if (r2 == 0) return T(0);
  T r = std::sqrt(r2);
  T c = x[2] / r;
  T radial = std::pow(r, m - ka) * detail::scaled_assoc_legendre<T>(m, ka, c);
  std::complex<T> z(x[0], x[1]);
  std::complex<T> zk = std::pow(z, ka);
  T azim = k >= 0 ? zk.real() : zk.imag();
  return detail::schmidt_factor<T>(m, ka) * radial * azim;
}

// Exact L^2 norm squared of a basis element on the sphere of radius s.
template <typename T = double>
T basis_sphere_norm2(int d, int m, T s) {
  require_dim(d);
  if (d == 2) return m == 0 ? 2 * kPi * s : kPi * std::pow(s, 2 * m + 1);
  return 4 * kPi / (2 * m + 1) * std::pow(s, 2 * m + 2);
}

// A homogeneous harmonic polynomial of fixed degree: coefficients over the
// solid-harmonic basis above.
template <typename T = double>
struct HarmonicPoly {
  int dim = 2;
  int degree = 0;
  VectorX<T> coeffs;  // size dim_component(dim, degree)

  HarmonicPoly() = default;
  HarmonicPoly(int d, int m, VectorX<T> c) : dim(d), degree(m), coeffs(std::move(c)) {
    if (coeffs.size() != dim_component(d, m))
      throw ValidationError("bad-degree", "coefficient count does not match degree");
  }

  template <typename Derived>
  T operator()(const Eigen::MatrixBase<Derived>& x) const {
    T acc = 0;
    for (int i = 0; i < coeffs.size(); ++i)
      if (coeffs[i] != 0) acc += coeffs[i] * solid_harmonic<T>(dim, degree, i, x);
    return acc;
  }
};

// Sum of harmonic components of distinct degrees (a polynomial in H_{<=N}).
template <typename T = double>
struct HarmonicSum {
  std::vector<HarmonicPoly<T>> terms;

  template <typename Derived>
  T operator()(const Eigen::MatrixBase<Derived>& x) const {
    T acc = 0;
    for (const auto& t : terms) acc += t(x);
    return acc;
  }

  // Coefficient vector of the degree-m term (zero vector if absent).
  VectorX<T> component(int d, int m) const {
    for (const auto& t : terms)
      if (t.degree == m) return t.coeffs;
    return VectorX<T>::Zero(dim_component(d, m));
  }
};

// Full basis of H_m in R^d as polynomial objects.
template <typename T = double>
std::vector<HarmonicPoly<T>> harmonic_basis(int d, int m) {
  std::vector<HarmonicPoly<T>> out;
  const int n = dim_component(d, m);
  for (int i = 0; i < n; ++i) {
    VectorX<T> c = VectorX<T>::Zero(n);
    c[i] = 1;
    out.emplace_back(d, m, std::move(c));
  }
  return out;
}

// Fundamental solution of -Laplace in R^d as a function of |x|.
template <typename T = double>
T fundamental_solution_radial(int d, T t) {
  require_dim(d);
  if (t <= 0) throw ValidationError("singular-point", "fundamental solution at 0");
  if (d == 2) return -std::log(t) / (2 * kPi);
  return 1 / (d * (d - 2) * unit_ball_volume<T>(d) * t);  // 1/(4 pi t) for d = 3
}

template <typename T = double, typename Derived>
T fundamental_solution(int d, const Eigen::MatrixBase<Derived>& x) {
  return fundamental_solution_radial<T>(d, T(x.norm()));
}

// Plain Legendre polynomial (used by tests and the d = 3 expansion oracle).
template <typename T = double>
T legendre_p(int m, T t) {
  if (m == 0) return 1;
  T p0 = 1, p1 = t;
  for (int l = 2; l <= m; ++l) {
    T p2 = ((2 * l - 1) * t * p1 - (l - 1) * p0) / l;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Harmonic components J_m(., y) of the expansion of Phi(x - y) around 0,
// valid for |x| < |y|.  Returned as polynomials in x, degrees 0..N.
// d = 2: Phi(x-y) = -log|y|/2pi + sum_m (1/2pi m) (cos m t_y Re z^m + sin m t_y Im z^m)/|y|^m
// d = 3: Phi(x-y) = sum_m |x|^m P_m(cos angle) / (4 pi |y|^{m+1}), addition
// formula over the Schmidt basis.
template <typename T = double>
std::vector<HarmonicPoly<T>> expand_fundamental(int d, const VectorX<T>& y, int N) {
  require_dim(d);
  if (N < 0 || N > kMaxHarmonicDegree)
    throw ValidationError("bad-degree", "truncation degree outside [0, 60]");
  T ay = y.norm();
  if (ay == 0) throw ValidationError("singular-point", "expansion center y = 0");
  std::vector<HarmonicPoly<T>> terms;
  terms.reserve(N + 1);
  if (d == 2) {
    VectorX<T> c0(1);
    c0[0] = -std::log(ay) / (2 * kPi);
    terms.emplace_back(2, 0, std::move(c0));
    std::complex<T> u(y[0] / ay, y[1] / ay);  // unit direction of y
    std::complex<T> um = u;
    for (int m = 1; m <= N; ++m) {
      T scale = 1 / (2 * kPi * m * std::pow(ay, m));
      VectorX<T> c(2);
      c[0] = scale * um.real();
      c[1] = scale * um.imag();
      terms.emplace_back(2, m, std::move(c));
      um *= u;
    }
  } else {
    for (int m = 0; m <= N; ++m) {
      T scale = 1 / (4 * kPi * std::pow(ay, 2 * m + 1));
      VectorX<T> c(2 * m + 1);
      for (int i = 0; i <= 2 * m; ++i) c[i] = scale * solid_harmonic<T>(3, m, i, y);
      terms.emplace_back(3, m, std::move(c));
    }
  }
  return terms;
}

// Shape of the tail bound for the truncated expansion:
// (N+1)^{d-2} (4|x| / 3|y|)^{N+1} Phi(|y|/4).  A fitted multiple of this
// dominates |Phi(x-y) - sum_{m<=N} J_m(x)| on |x| <= |y|/2.
template <typename T = double>
T expansion_tail_shape(int d, T ax, T ay, int N) {
  return std::pow(T(N + 1), d - 2) * std::pow(4 * ax / (3 * ay), N + 1) *
         fundamental_solution_radial<T>(d, ay / 4);
}

// L^2(sphere) projection of sampled values onto H_m, exploiting exact basis
// orthogonality on the sphere.  values[j] belongs to rule.nodes.col(j);
// coordinates for the polynomial are relative to the rule center.
template <typename T = double>
HarmonicPoly<T> project_harmonic(const SphereRule<T>& rule, const VectorX<T>& values,
                                 int m) {
  if (values.size() != rule.weights.size())
    throw ValidationError("bad-sample", "value count does not match rule");
  if (rule.exact_degree < 2 * m)
    throw ValidationError("insufficient-quadrature",
                          "sphere rule order " + std::to_string(rule.exact_degree) +
                              " below 2m = " + std::to_string(2 * m));
  const int d = rule.dim;
  const int n = dim_component(d, m);
  VectorX<T> c(n);
  for (int i = 0; i < n; ++i) {
    T num = 0;
    for (int j = 0; j < rule.count(); ++j) {
      VectorX<T> rel = rule.nodes.col(j) - rule.center;
      num += rule.weights[j] * values[j] * solid_harmonic<T>(d, m, i, rel);
    }
    c[i] = num / basis_sphere_norm2<T>(d, m, rule.radius);
  }
  return HarmonicPoly<T>(d, m, std::move(c));
}

// Discrete (2d+1)-point stencil Laplacian of a callable field, for
// harmonicity checks.
template <typename T = double, typename F>
T stencil_laplacian(int d, F&& f, const VectorX<T>& x, T h) {
  T acc = 0;
  for (int i = 0; i < d; ++i) {
    VectorX<T> xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    acc += f(xp) + f(xm) - 2 * f(x);
  }
  return acc / (h * h);
}

}  // namespace doslab
