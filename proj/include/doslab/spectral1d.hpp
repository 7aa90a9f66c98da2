#pragma once

// One-dimensional Dirichlet spectral engine: finite-difference eigenpairs of
// -psi'' + V psi with cell-averaged singular potentials, eigenvalue-window
// counting, point-constrained subspaces of spectral windows, the first-order
// transfer system with forcing, and the Gronwall-type sup bound that controls
// members of a constrained window subspace near their constraint points.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "doslab/errors.hpp"
#include "doslab/potentials.hpp"
#include "doslab/tridiag.hpp"
#include "doslab/types.hpp"

namespace doslab {

template <typename T = double>
struct Interval {
  T a0 = 0;
  T length = 1;
};

// Eigenpairs of the Dirichlet operator on (a0, a0 + length) below e_max.
// Vectors live on the interior nodes of the finest grid used; the boundary
// values are implicitly zero and are not stored.  Columns are orthonormal in
// the trapezoid inner product h * sum_i v_i w_i.
//
// eigenvalues are Richardson-extrapolated across three nested grids
// (h, h/2, h/4); grid_eigenvalues are the raw finest-grid values consistent
// with the stored discrete operator (used for residual arithmetic).
template <typename T = double>
struct EigenSystem {
  T a0 = 0;
  T length = 0;
  int n = 0;  // interior nodes of the vector grid
  T h = 0;    // node spacing, length / (n + 1)
  T e_max = 0;
  std::string boundary = "dirichlet";
  VectorX<T> eigenvalues;       // extrapolated, ascending
  VectorX<T> grid_eigenvalues;  // raw finest-grid values
  VectorX<T> richardson_err;    // |difference of successive extrapolants|
  VectorX<T> richardson_ratio;  // (lam_h - lam_h2)/(lam_h2 - lam_h4); NaN if below rounding
  VectorX<T> vbar;              // cell-averaged potential on the vector grid
  MatrixX<T> vectors;           // n x count

  int count() const { return static_cast<int>(eigenvalues.size()); }
  T node(int i) const { return a0 + (i + 1) * h; }
};

namespace detail {

template <typename T>
SymTridiag<T> assemble_1d(const Potential<T>& V, T a0, T len, int n, VectorX<T>* vbar_out) {
  T h = len / (n + 1);
  T inv_h2 = 1 / (h * h);
  SymTridiag<T> A;
  A.diag.resize(n);
  A.off = VectorX<T>::Constant(n > 1 ? n - 1 : 0, -inv_h2);
  if (vbar_out) vbar_out->resize(n);
  for (int i = 0; i < n; ++i) {
    T xl = a0 + (i + T(0.5)) * h;
    T vb = V.cell_average(xl, xl + h);
    A.diag[i] = 2 * inv_h2 + vb;
    if (vbar_out) (*vbar_out)[i] = vb;
  }
  return A;
}

// Reject potentials that fail the local-integrability hypothesis.  Singular
// bumps are integrable by construction (alpha p < d is gated), so trouble can
// only hide in the declared-bounded field: catch non-finite cell averages,
// spot-check the bounded field against its declared sup on the worst cells,
// and flag worst-cell averages that keep growing by more than the 2x-per-
// halving ceiling any integrable power law obeys.
template <typename T>
void check_cell_integrability(const Potential<T>& V, T a0, T h, const VectorX<T>& vbar,
                              T e_max) {
  int iworst = 0;
  T worst = 0;
  for (int i = 0; i < vbar.size(); ++i) {
    if (!std::isfinite(vbar[i]))
      throw NumericalError("potential-rejected", "non-finite cell average");
    if (std::abs(vbar[i]) > worst) {
      worst = std::abs(vbar[i]);
      iworst = i;
    }
  }
  if (V.has_bounded()) {
    static const T gx[5] = {T(-0.9061798459386640), T(-0.5384693101056831), T(0),
                            T(0.5384693101056831), T(0.9061798459386640)};
    T peak = 0;
    for (int cell = iworst - 1; cell <= iworst + 1; ++cell) {
      if (cell < 0 || cell >= vbar.size()) continue;
      T mid = a0 + (cell + 1) * h;
      for (int i = 0; i < 5; ++i) {
        VectorX<T> x(1);
        x[0] = mid + h / 2 * gx[i];
        T val = std::abs(V.bounded_part(x));
        if (!std::isfinite(val))
          throw NumericalError("potential-rejected", "non-finite bounded-part sample");
        peak = std::max(peak, val);
      }
    }
    if (peak > 100 * (1 + V.k1()) + std::abs(e_max))
      throw NumericalError("potential-rejected",
                           "bounded part exceeds its declared sup bound by orders of "
                           "magnitude (hidden non-integrable singularity)");
  }
  T xl = a0 + (iworst + T(0.5)) * h;
  auto worst_half = [&](T lo, T hi) {
    T m = lo + (hi - lo) / 2;
    T va = V.cell_average(lo, m), vb = V.cell_average(m, hi);
    if (!std::isfinite(va) || !std::isfinite(vb))
      throw NumericalError("potential-rejected", "non-finite cell average");
    return std::abs(va) >= std::abs(vb) ? std::make_pair(std::abs(va), std::make_pair(lo, m))
                                        : std::make_pair(std::abs(vb), std::make_pair(m, hi));
  };
  auto [w1, c1] = worst_half(xl, xl + h);
  auto [w2, c2] = worst_half(c1.first, c1.second);
  const T growth = T(2.05);
  if (w1 > growth * worst && w2 > growth * w1 && w2 > 50 * (1 + std::abs(e_max)))
    throw NumericalError("potential-rejected",
                         "cell averages diverge under refinement (non-integrable singularity)");
}

}  // namespace detail

// Eigenpairs below e_max on the Dirichlet interval iv.  Three nested grids
// (n0, 2 n0 + 1, 4 n0 + 3 interior nodes) give a Richardson-extrapolated
// eigenvalue, an error estimate (difference of the two extrapolants), and the
// observed h^2 ratio.  The grid is refined until every kept eigenvalue meets
// rel_tol; vectors come from inverse iteration on the finest grid.
template <typename T = double>
EigenSystem<T> eigs_interval(const Potential<T>& V, const Interval<T>& iv, T e_max,
                             int n_coarse = 0, T rel_tol = T(1e-6)) {
  if (V.dim() != 1) throw ValidationError("unsupported-dimension", "eigs_interval is 1D");
  if (!(iv.length > 0)) throw ValidationError("bad-parameter", "interval length must be positive");
  if (!std::isfinite(e_max)) throw ValidationError("bad-parameter", "E_max must be finite");
  const T a0 = iv.a0, len = iv.length;

  // Unit-window L^1 hypothesis scan: must be finite for the operator to make
  // sense; divergence under cell refinement is checked per grid below.
  T kwin = unit_window_l1_sup(V, a0, a0 + len, std::min(T(0.05), len / 8));
  if (!std::isfinite(kwin))
    throw NumericalError("potential-rejected", "unit-window L1 scan diverged");

  int n0 = n_coarse > 0
               ? n_coarse
               : std::clamp(static_cast<int>(std::ceil(
                                4 * len * std::sqrt(std::max(e_max, T(1))))),
                            129, 12000);
  const T slack = std::max(T(0.25), T(0.05) * std::abs(e_max));

  for (int attempt = 0;; ++attempt) {
    int n1 = 2 * n0 + 1, n2 = 4 * n0 + 3;
    VectorX<T> vbar;
    SymTridiag<T> A0 = detail::assemble_1d(V, a0, len, n0, static_cast<VectorX<T>*>(nullptr));
    SymTridiag<T> A1 = detail::assemble_1d(V, a0, len, n1, static_cast<VectorX<T>*>(nullptr));
    SymTridiag<T> A2 = detail::assemble_1d(V, a0, len, n2, &vbar);
    T h2 = len / (n2 + 1);
    detail::check_cell_integrability(V, a0, h2, vbar, e_max);

    int m = std::min({sturm_count(A0, e_max + slack), sturm_count(A1, e_max + slack),
                      sturm_count(A2, e_max + slack)});
    m = std::min(m, n0);

    VectorX<T> lam0 = eigenvalues_first(A0, m);
    VectorX<T> lam1 = eigenvalues_first(A1, m);
    VectorX<T> lam2 = eigenvalues_first(A2, m);

    VectorX<T> extrap(m), err(m), ratio(m);
    bool converged = true;
    for (int k = 0; k < m; ++k) {
      T e01 = lam1[k] + (lam1[k] - lam0[k]) / 3;
      T e12 = lam2[k] + (lam2[k] - lam1[k]) / 3;
      extrap[k] = e12;
      err[k] = std::abs(e12 - e01);
      T num = lam0[k] - lam1[k], den = lam1[k] - lam2[k];
      T rough = T(64) * std::numeric_limits<T>::epsilon() *
                std::max(T(1), std::abs(lam2[k]));
      ratio[k] = std::abs(den) > rough ? num / den : std::numeric_limits<T>::quiet_NaN();
      if (extrap[k] <= e_max && err[k] > rel_tol * std::max(T(1), std::abs(extrap[k])))
        converged = false;
    }

    if (!converged && n0 < 30000 && attempt < 7) {
      n0 = std::min(2 * n0 + 1, 30000);
      continue;
    }
    if (!converged)
      throw NumericalError("no-convergence",
                           "eigenvalue Richardson target not met at the grid cap");

    int keep = 0;
    while (keep < m && extrap[keep] <= e_max * (1 + T(1e-12)) + T(1e-12)) ++keep;

    EigenSystem<T> es;
    es.a0 = a0;
    es.length = len;
    es.n = n2;
    es.h = h2;
    es.e_max = e_max;
    es.eigenvalues = extrap.head(keep);
    es.grid_eigenvalues = lam2.head(keep);
    es.richardson_err = err.head(keep);
    es.richardson_ratio = ratio.head(keep);
    es.vbar = vbar;
    es.vectors.resize(n2, keep);
    std::vector<VectorX<T>> done;
    done.reserve(keep);
    const T sqrt_h = std::sqrt(es.h);
    for (int k = 0; k < keep; ++k) {
      std::vector<VectorX<T>> close;
      for (int j = 0; j < k; ++j)
        if (std::abs(lam2[j] - lam2[k]) < T(1e-6) * std::max(T(1), std::abs(lam2[k])))
          close.push_back(done[j]);
      VectorX<T> v = tridiag_eigenvector(A2, lam2[k], close);
      done.push_back(v);
      es.vectors.col(k) = v / sqrt_h;  // trapezoid-orthonormal
    }
    return es;
  }
}

// Window-count diagnostics: which eigenvalues sat within the tie tolerance of
// a window edge (they count as inside).
struct DosFlags {
  int count = 0;
  std::vector<int> edge_indices;
};

// eta = (# eigenvalues in [e, e + eps]) / length.  Eigenvalues within 1e-9 of
// either edge count as inside and are flagged.
template <typename T = double>
T dos_window(const EigenSystem<T>& es, T e, T eps, T length, DosFlags* flags = nullptr) {
  if (!(eps >= 0) || !std::isfinite(e) || !(length > 0))
    throw ValidationError("bad-parameter", "dos_window needs eps >= 0, finite E, length > 0");
  const T tie = T(1e-9);
  if (e + eps > es.e_max + tie)
    throw ValidationError("window-out-of-range",
                          "window [E, E+eps] exceeds the computed spectral ceiling");
  int c = 0;
  if (flags) *flags = {};
  for (int k = 0; k < es.count(); ++k) {
    T lam = es.eigenvalues[k];
    if (lam >= e - tie && lam <= e + eps + tie) {
      ++c;
      if (flags && (std::abs(lam - e) <= tie || std::abs(lam - (e + eps)) <= tie))
        flags->edge_indices.push_back(k);
    }
  }
  if (flags) flags->count = c;
  return T(c) / length;
}

// Indices of eigenvalues inside [e, e + eps] under the same tie rule.
template <typename T = double>
std::vector<int> window_indices(const EigenSystem<T>& es, T e, T eps) {
  const T tie = T(1e-9);
  std::vector<int> out;
  for (int k = 0; k < es.count(); ++k)
    if (es.eigenvalues[k] >= e - tie && es.eigenvalues[k] <= e + eps + tie)
      out.push_back(k);
  return out;
}

// Value of a grid vector at an interior point (nearest node) and its
// derivative by a one-sided 4th-order five-point stencil.
template <typename T = double>
int nearest_node(const EigenSystem<T>& es, T a) {
  int j = static_cast<int>(std::lround((a - es.a0) / es.h)) - 1;
  if (j < 0 || j >= es.n)
    throw ValidationError("bad-parameter", "point not interior to the interval");
  return j;
}

template <typename T, typename Derived>
T grid_value_at(const EigenSystem<T>& es, const Eigen::MatrixBase<Derived>& v, T a) {
  return v[nearest_node(es, a)];
}

template <typename T, typename Derived>
T grid_derivative_at(const EigenSystem<T>& es, const Eigen::MatrixBase<Derived>& v, T a) {
  if (es.n < 9)
    throw ValidationError("bad-parameter", "grid too small for the derivative stencil");
  int j = nearest_node(es, a);
  static const T w[5] = {T(-25) / 12, T(4), T(-3), T(4) / 3, T(-1) / 4};
  int dir = j + 4 < es.n ? 1 : -1;
  T acc = 0;
  for (int k = 0; k < 5; ++k) acc += w[k] * v[j + dir * k];
  return dir * acc / es.h;
}

// Orthonormal basis (coefficients over the window eigenbasis) of the subspace
// annihilating value and derivative at each constraint point: the null space
// of the 2 * #points by window-dim evaluation matrix, by SVD with a relative
// threshold.
template <typename T = double>
struct ConstrainedSubspace {
  std::vector<int> window;   // eigensystem indices spanning the window
  std::vector<T> points;     // constraint points a_j
  MatrixX<T> coeffs;         // window-dim x dimension, orthonormal columns
  int dimension = 0;
  bool possibly_trivial = false;  // 2 #points >= window dim
  VectorX<T> singular_values;     // of the constraint matrix (diagnostics)
};

template <typename T = double>
VectorX<T> subspace_vector(const EigenSystem<T>& es, const std::vector<int>& window,
                           const VectorX<T>& coeff) {
  VectorX<T> out = VectorX<T>::Zero(es.n);
  for (size_t i = 0; i < window.size(); ++i) out += coeff[i] * es.vectors.col(window[i]);
  return out;
}

template <typename T = double>
ConstrainedSubspace<T> constrained_subspace(const EigenSystem<T>& es,
                                            const std::vector<int>& window,
                                            const std::vector<T>& points,
                                            T svd_rel_tol = T(1e-10)) {
  const int dim = static_cast<int>(window.size());
  if (dim == 0) throw ValidationError("bad-parameter", "empty window basis");
  for (int k : window)
    if (k < 0 || k >= es.count())
      throw ValidationError("bad-parameter", "window index out of range");
  for (T a : points)
    if (!(a > es.a0 && a < es.a0 + es.length))
      throw ValidationError("bad-parameter", "constraint point not interior");

  ConstrainedSubspace<T> cs;
  cs.window = window;
  cs.points = points;
  cs.possibly_trivial = 2 * static_cast<int>(points.size()) >= dim;
  if (points.empty()) {
    cs.coeffs = MatrixX<T>::Identity(dim, dim);
    cs.dimension = dim;
    return cs;
  }

  MatrixX<T> A(2 * points.size(), dim);
  for (size_t p = 0; p < points.size(); ++p)
    for (int i = 0; i < dim; ++i) {
      const auto col = es.vectors.col(window[i]);
      A(2 * p, i) = grid_value_at(es, col, points[p]);
      A(2 * p + 1, i) = grid_derivative_at(es, col, points[p]);
    }
  Eigen::JacobiSVD<MatrixX<T>> svd(A, Eigen::ComputeFullV);
  cs.singular_values = svd.singularValues();
  T smax = cs.singular_values.size() ? cs.singular_values[0] : T(0);
  int rank = 0;
  for (int i = 0; i < cs.singular_values.size(); ++i)
    if (cs.singular_values[i] > svd_rel_tol * smax) ++rank;
  cs.dimension = dim - rank;
  cs.coeffs = svd.matrixV().rightCols(cs.dimension);
  return cs;
}

// ----- transfer system -------------------------------------------------------

template <typename T = double>
struct TransferOptions {
  T tol = T(1e-10);  // doubling-convergence target on the final state
  int n_init = 64;
  int max_doublings = 18;
};

namespace detail {

// Exact flow over a step of u' = v, v' = qbar u - zbar with frozen
// coefficients; series branch keeps it smooth through qbar -> 0.
template <typename T>
void transfer_step(T h, T qbar, T zbar, T& u, T& v) {
  T th2 = qbar * h * h;
  T c, s, p;
  if (std::abs(th2) < T(1e-8)) {
    c = 1 + th2 / 2 + th2 * th2 / 24;
    s = h * (1 + th2 / 6 + th2 * th2 / 120);
    p = h * h * (T(0.5) + th2 / 24 + th2 * th2 / 720);
  } else if (qbar > 0) {
    T w = std::sqrt(qbar);
    c = std::cosh(w * h);
    s = std::sinh(w * h) / w;
    p = (c - 1) / qbar;
  } else {
    T w = std::sqrt(-qbar);
    c = std::cos(w * h);
    s = std::sin(w * h) / w;
    p = (c - 1) / qbar;
  }
  T un = c * u + s * v - p * zbar;
  T vn = qbar * s * u + c * v - s * zbar;
  u = un;
  v = vn;
}

}  // namespace detail

// Integrate the first-order system Psi' = (psi, psi')' with psi'' =
// (V - E) psi - zeta from zero initial data at a to the point x.  V enters
// every substep only through its cell average (its running integral), so
// integrable singularities cost accuracy, not stability; each refinement
// doubles the substep count until the endpoint state settles to tol.
template <typename T = double>
Vector2<T> transfer_solve(const Potential<T>& V, T e, const std::function<T(T)>& zeta,
                          T a, T x, const TransferOptions<T>& opt = {}) {
  if (V.dim() != 1) throw ValidationError("unsupported-dimension", "transfer_solve is 1D");
  if (!std::isfinite(a) || !std::isfinite(x) || !std::isfinite(e))
    throw ValidationError("bad-parameter", "non-finite transfer arguments");
  Vector2<T> out = Vector2<T>::Zero();
  if (x == a) return out;

  auto run = [&](int nsteps) {
    T h = (x - a) / nsteps;
    T u = 0, v = 0;
    for (int i = 0; i < nsteps; ++i) {
      T t0 = a + i * h, t1 = t0 + h;
      T qbar = V.cell_average(std::min(t0, t1), std::max(t0, t1)) - e;
      T zbar = zeta ? (zeta(t0) + 4 * zeta(t0 + h / 2) + zeta(t1)) / 6 : T(0);
      if (!std::isfinite(qbar) || !std::isfinite(zbar))
        throw NumericalError("integration-failure", "non-finite coefficient average");
      detail::transfer_step(h, qbar, zbar, u, v);
    }
    return Vector2<T>(u, v);
  };

  int n = opt.n_init;
  Vector2<T> prev = run(n);
  for (int k = 0; k < opt.max_doublings; ++k) {
    n *= 2;
    Vector2<T> cur = run(n);
    T diff = (cur - prev).template lpNorm<Eigen::Infinity>();
    T size = cur.template lpNorm<Eigen::Infinity>();
    if (!std::isfinite(size))
      throw NumericalError("integration-failure", "transfer state overflow");
    if (diff <= opt.tol * (1 + size)) return cur;
    prev = cur;
  }
  throw NumericalError("integration-failure",
                       "transfer integration did not settle (step-size underflow)");
}

// ----- Gronwall sup bound ----------------------------------------------------

template <typename T = double>
struct GronwallRecord {
  T lhs = 0;        // sup |psi| within distance R of a constraint point
  T rhs = 0;        // exp(C max(R,1)) sqrt(R) eps ||psi||_2
  T c_const = 0;    // C = 1 + |E| + K
  T k_const = 0;    // unit-window L1 sup of V
  T resid_rel = 0;  // ||(H - E) psi||_2 / ||psi||_2
  T psi_norm = 0;   // trapezoid L2 norm
  bool pass = false;
};

// Apply the assembled discrete operator to a grid vector (Dirichlet halo).
template <typename T = double>
VectorX<T> hamiltonian_apply(const EigenSystem<T>& es, const VectorX<T>& psi) {
  const T inv_h2 = 1 / (es.h * es.h);
  VectorX<T> out(es.n);
  for (int i = 0; i < es.n; ++i) {
    T left = i > 0 ? psi[i - 1] : T(0);
    T right = i + 1 < es.n ? psi[i + 1] : T(0);
    out[i] = (2 * psi[i] - left - right) * inv_h2 + es.vbar[i] * psi[i];
  }
  return out;
}

// Check the a-priori sup bound for a member of the constrained window
// subspace: sup of |psi| near the constraint points against
// exp(C max(R,1)) sqrt(R) eps ||psi||.  The approximate-eigenfunction and
// constraint-residual preconditions are verified before any bound arithmetic.
template <typename T = double>
GronwallRecord<T> gronwall_bound_check(const EigenSystem<T>& es, const VectorX<T>& psi,
                                       const std::vector<T>& points, const Potential<T>& V,
                                       T e, T r, T eps) {
  if (points.empty()) throw ValidationError("bad-parameter", "no constraint points");
  if (psi.size() != es.n) throw ValidationError("bad-parameter", "grid size mismatch");
  if (!(r > 0) || !(eps > 0))
    throw ValidationError("bad-parameter", "R and eps must be positive");

  GronwallRecord<T> rec;
  const T sqrt_h = std::sqrt(es.h);
  rec.psi_norm = sqrt_h * psi.norm();
  if (!(rec.psi_norm > T(1e-14) * (1 + psi.cwiseAbs().maxCoeff())))
    throw ValidationError("precondition-violation", "psi is (numerically) zero");

  VectorX<T> resid = hamiltonian_apply(es, psi) - e * psi;
  rec.resid_rel = sqrt_h * resid.norm() / rec.psi_norm;
  if (rec.resid_rel > eps + T(1e-12) * std::max(T(1), std::abs(e)))
    throw ValidationError("precondition-violation",
                          "psi is not an eps-approximate eigenfunction at E");

  const T ctol = T(1e-8) * rec.psi_norm;
  for (T a : points) {
    if (std::abs(grid_value_at(es, psi, a)) > ctol ||
        std::abs(grid_derivative_at(es, psi, a)) > ctol)
      throw ValidationError("precondition-violation", "constraint residuals exceed tolerance");
  }

  rec.k_const = unit_window_l1_sup(V, es.a0, es.a0 + es.length,
                                   std::min(T(0.05), es.length / 8));
  rec.c_const = 1 + std::abs(e) + rec.k_const;
  T expo = rec.c_const * std::max(r, T(1));
  rec.rhs = (expo > 700 ? std::numeric_limits<T>::infinity() : std::exp(expo)) *
            std::sqrt(r) * eps * rec.psi_norm;

  T sup = 0;
  for (int i = 0; i < es.n; ++i) {
    T xi = es.node(i);
    for (T a : points)
      if (std::abs(xi - a) <= r) {
        sup = std::max(sup, std::abs(psi[i]));
        break;
      }
  }
  rec.lhs = sup;
  rec.pass = rec.lhs <= rec.rhs;
  return rec;
}

// Proof-shape choice of the Gronwall radius from the constraint density rho,
// clamped away from the grid scale and the interval half-length.
template <typename T = double>
T gronwall_radius(T rho, T h, T length) {
  if (!(rho > 0)) throw ValidationError("bad-parameter", "rho must be positive");
  return std::clamp(4 / rho, 2 * h, length / 2);
}

// ----- log-Hoelder sweep -----------------------------------------------------

template <typename T = double>
struct LogHolderRow {
  T eps = 0;
  T length = 0;  // L = l0 log(1/eps)
  T e = 0;
  T eta = 0;
  T product = 0;  // eta * log(1/eps)
};

// For each eps in (0, 1/2] and each energy E <= e0 on the scan grid, compute
// eta([E, E+eps]) on the interval (0, L(eps)) with L = l0 log(1/eps) and
// report eta * log(1/eps), the quantity the 1D continuity bound controls.
template <typename T = double>
std::vector<LogHolderRow<T>> log_holder_check_1d(const Potential<T>& V, T e0,
                                                 const std::vector<T>& eps_list, T l0,
                                                 std::vector<T> e_grid = {},
                                                 int n_coarse = 0) {
  if (eps_list.empty()) throw ValidationError("bad-parameter", "empty eps list");
  for (T eps : eps_list)
    if (!(eps > 0) || eps > T(0.5))
      throw ValidationError("bad-parameter", "eps values must lie in (0, 1/2]");
  if (!(l0 > 0)) throw ValidationError("bad-parameter", "L0 must be positive");
  if (e_grid.empty())
    for (int i = 0; i < 5; ++i) e_grid.push_back(e0 - 2 + i * T(0.5));
  for (T e : e_grid)
    if (e > e0 + T(1e-12)) throw ValidationError("bad-parameter", "energy grid exceeds E0");

  T eps_max = *std::max_element(eps_list.begin(), eps_list.end());
  T e_top = *std::max_element(e_grid.begin(), e_grid.end());
  std::vector<LogHolderRow<T>> rows;
  rows.reserve(eps_list.size() * e_grid.size());
  for (T eps : eps_list) {
    T logi = std::log(1 / eps);
    T len = l0 * logi;
    EigenSystem<T> es =
        eigs_interval(V, Interval<T>{0, len}, e_top + eps_max + 1, n_coarse);
    for (T e : e_grid) {
      LogHolderRow<T> row;
      row.eps = eps;
      row.length = len;
      row.e = e;
      row.eta = dos_window(es, e, eps, len);
      row.product = row.eta * logi;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace doslab
