#pragma once

// Symmetric tridiagonal eigen tools sized for 1D finite-difference grids:
// Sturm-count bisection by index and inverse-iteration eigenvectors.  For a
// few thousand unknowns and a few hundred wanted pairs this is
// O(pairs * n * bisections) and never forms a dense matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "doslab/errors.hpp"
#include "doslab/types.hpp"

namespace doslab {

template <typename T = double>
struct SymTridiag {
  VectorX<T> diag;  // n
  VectorX<T> off;   // n - 1, sub- and super-diagonal
  int size() const { return static_cast<int>(diag.size()); }
};

// Interval [lo, hi] containing the whole spectrum (Gershgorin discs).
template <typename T = double>
std::pair<T, T> spectral_bounds(const SymTridiag<T>& A) {
  const int n = A.size();
  if (n == 0) throw ValidationError("bad-parameter", "empty matrix");
  T lo = std::numeric_limits<T>::infinity();
  T hi = -lo;
  for (int i = 0; i < n; ++i) {
    T r = (i > 0 ? std::abs(A.off[i - 1]) : T(0)) +
          (i + 1 < n ? std::abs(A.off[i]) : T(0));
    lo = std::min(lo, A.diag[i] - r);
    hi = std::max(hi, A.diag[i] + r);
  }
  return {lo, hi};
}

// Number of eigenvalues strictly below lam, via the Sturm sequence of the
// shifted LDL^T recurrence.  Pivots are floored so the recurrence stays
// finite when lam hits a Ritz value of a leading minor.
template <typename T = double>
int sturm_count(const SymTridiag<T>& A, T lam) {
  const int n = A.size();
  T off2max = 1;
  for (int i = 0; i + 1 < n; ++i) off2max = std::max(off2max, A.off[i] * A.off[i]);
  const T pivmin = std::numeric_limits<T>::min() * off2max;
  int count = 0;
  T d = 1;
  for (int i = 0; i < n; ++i) {
    T off2 = i > 0 ? A.off[i - 1] * A.off[i - 1] : T(0);
    d = A.diag[i] - lam - off2 / d;
    if (std::abs(d) < pivmin) d = -pivmin;
    if (d < 0) ++count;
  }
  return count;
}

// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
template <typename T = double>
T eigenvalue_by_index(const SymTridiag<T>& A, int k, T rel_tol = T(1e-14)) {
  const int n = A.size();
  if (k < 0 || k >= n)
    throw ValidationError("bad-parameter", "eigenvalue index out of range");
  auto [lo, hi] = spectral_bounds(A);
  T pad = std::max(hi - lo, T(1)) * T(1e-6);
  lo -= pad;
  hi += pad;
  for (int it = 0; it < 200; ++it) {
    T sc = std::max({T(1), std::abs(lo), std::abs(hi)});
    if (hi - lo <= rel_tol * sc) break;
    T mid = lo + (hi - lo) / 2;
    if (sturm_count(A, mid) <= k) lo = mid; else hi = mid;
  }
  return lo + (hi - lo) / 2;
}

// First m eigenvalues ascending; each bisection reuses the previous value as
// its lower bracket, which halves the work on ordered sweeps.
template <typename T = double>
VectorX<T> eigenvalues_first(const SymTridiag<T>& A, int m, T rel_tol = T(1e-14)) {
  if (m < 0 || m > A.size())
    throw ValidationError("bad-parameter", "eigenvalue count out of range");
  auto [glo, ghi] = spectral_bounds(A);
  T pad = std::max(ghi - glo, T(1)) * T(1e-6);
  VectorX<T> out(m);
  T lower = glo - pad;
  for (int k = 0; k < m; ++k) {
    T lo = lower, hi = ghi + pad;
    for (int it = 0; it < 200; ++it) {
      T sc = std::max({T(1), std::abs(lo), std::abs(hi)});
      if (hi - lo <= rel_tol * sc) break;
      T mid = lo + (hi - lo) / 2;
      if (sturm_count(A, mid) <= k) lo = mid; else hi = mid;
    }
    out[k] = lo + (hi - lo) / 2;
    lower = out[k] - rel_tol * std::max(T(1), std::abs(out[k]));
  }
  return out;
}

template <typename T = double>
VectorX<T> tridiag_apply(const SymTridiag<T>& A, const VectorX<T>& v) {
  const int n = A.size();
  VectorX<T> out(n);
  for (int i = 0; i < n; ++i) {
    T acc = A.diag[i] * v[i];
    if (i > 0) acc += A.off[i - 1] * v[i - 1];
    if (i + 1 < n) acc += A.off[i] * v[i + 1];
    out[i] = acc;
  }
  return out;
}

namespace detail {

// Solve (A - sigma I) x = rhs in place by banded LU with partial pivoting.
// Row swaps introduce one extra superdiagonal; pivots are floored to keep the
// near-singular solves of inverse iteration finite (growth is the point).
template <typename T>
void tridiag_shifted_solve(const SymTridiag<T>& A, T sigma, VectorX<T>& rhs) {
  const int n = A.size();
  T scale = std::abs(sigma);
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(A.diag[i]));
  for (int i = 0; i + 1 < n; ++i) scale = std::max(scale, std::abs(A.off[i]));
  const T pivmin = std::max(scale, T(1)) * T(1e-280);

  if (n == 1) {
    T piv = A.diag[0] - sigma;
    if (std::abs(piv) < pivmin) piv = pivmin;
    rhs[0] /= piv;
    return;
  }

  VectorX<T> du(n), d1(n), d2(n);
  T r0 = A.diag[0] - sigma;
  T r1 = A.off[0];
  T r2 = 0;
  for (int i = 0; i + 1 < n; ++i) {
    T s0 = A.off[i];
    T s1 = A.diag[i + 1] - sigma;
    T s2 = i + 2 < n ? A.off[i + 1] : T(0);
    T bi = rhs[i], bn = rhs[i + 1];
    if (std::abs(s0) > std::abs(r0)) {
      std::swap(r0, s0);
      std::swap(r1, s1);
      std::swap(r2, s2);
      std::swap(bi, bn);
    }
    if (std::abs(r0) < pivmin) r0 = r0 < 0 ? -pivmin : pivmin;
    T mult = s0 / r0;
    du[i] = r0;
    d1[i] = r1;
    d2[i] = r2;
    rhs[i] = bi;
    rhs[i + 1] = bn - mult * bi;
    r0 = s1 - mult * r1;
    r1 = s2 - mult * r2;
    r2 = 0;
  }
  if (std::abs(r0) < pivmin) r0 = r0 < 0 ? -pivmin : pivmin;
  du[n - 1] = r0;
  d1[n - 1] = 0;
  d2[n - 1] = 0;

  rhs[n - 1] /= du[n - 1];
  if (n >= 2) rhs[n - 2] = (rhs[n - 2] - d1[n - 2] * rhs[n - 1]) / du[n - 2];
  for (int i = n - 3; i >= 0; --i)
    rhs[i] = (rhs[i] - d1[i] * rhs[i + 1] - d2[i] * rhs[i + 2]) / du[i];
}

}  // namespace detail

// Inverse-iteration eigenvector for the eigenvalue lam (accurate to rounding
// from bisection).  Deterministic start; neighbors holds already-accepted
// vectors of nearby eigenvalues to re-orthogonalize against.  The result has
// unit Euclidean norm and a deterministic sign (largest component positive).
template <typename T = double>
VectorX<T> tridiag_eigenvector(const SymTridiag<T>& A, T lam,
                               const std::vector<VectorX<T>>& neighbors = {},
                               T res_tol = T(1e-9)) {
  const int n = A.size();
  auto [lo, hi] = spectral_bounds(A);
  const T scale = std::max({T(1), std::abs(lo), std::abs(hi)});
  VectorX<T> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = std::sin(T(0.754877666246693) * (i + 1)) + T(0.5) * std::cos(T(1.1) * i);
  v.normalize();
  for (int it = 0; it < 40; ++it) {
    for (const auto& u : neighbors) v -= u.dot(v) * u;
    detail::tridiag_shifted_solve(A, lam, v);
    T mx = v.cwiseAbs().maxCoeff();
    if (!(mx > 0) || !std::isfinite(mx)) {
      for (int i = 0; i < n; ++i) v[i] = std::cos(T(0.37) * (i + 1) + it);
      v.normalize();
      continue;
    }
    v /= mx;
    for (const auto& u : neighbors) v -= u.dot(v) * u;
    T nrm = v.norm();
    if (!(nrm > 0)) continue;
    v /= nrm;
    T res = (tridiag_apply(A, v) - lam * v).norm();
    if (res <= res_tol * scale) {
      int imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      if (v[imax] < 0) v = -v;
      return v;
    }
  }
  throw NumericalError("eigenvector-failure",
                       "inverse iteration did not reach the residual target");
}

}  // namespace doslab
