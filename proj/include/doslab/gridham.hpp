#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "doslab/errors.hpp"
#include "doslab/potentials.hpp"
#include "doslab/types.hpp"

namespace doslab {

// Desk caps for grid eigenproblems: full dense decomposition up to
// kDenseNodeCap unknowns, shift-invert with a sparse factorization up to
// kGridNodeCap, refusal beyond that (before any allocation).
inline constexpr long kDenseNodeCap = 5000;
inline constexpr long kGridNodeCap = 40000;

enum class Bc { dirichlet, periodic };

// Open axis-aligned box of side L around a center point.
template <typename T = double>
struct BoxDomain {
  VectorX<T> center;
  T side = 0;

  int dim() const { return static_cast<int>(center.size()); }
  VectorX<T> lower() const { return center.array() - side / 2; }
  VectorX<T> upper() const { return center.array() + side / 2; }
};

// Uniform tensor grid on a box.  Dirichlet keeps the n^d interior nodes of an
// (n+1)-interval subdivision (h = L/(n+1)); periodic uses n cell centers per
// side (h = L/n).  Either way the cell of a node is the +-h/2 box around it,
// so diagonal cell averages preserve the L^1 mass of integrable singular
// parts.  Axis 0 is the fastest-running index.
template <typename T = double>
struct GridGeom {
  VectorX<T> lo;  // lower box corner
  T side = 0;
  int n = 0;    // nodes per side
  int dim = 0;  // 1, 2 or 3
  Bc bc = Bc::dirichlet;
  T h = 0;

  long size() const {
    long s = 1;
    for (int a = 0; a < dim; ++a) s *= n;
    return s;
  }
  long stride(int axis) const {
    long s = 1;
    for (int a = 0; a < axis; ++a) s *= n;
    return s;
  }
  T first_offset() const { return bc == Bc::dirichlet ? h : h / 2; }
  VectorX<T> node(long idx) const {
    VectorX<T> x(dim);
    for (int a = 0; a < dim; ++a) {
      x[a] = lo[a] + first_offset() + static_cast<T>(idx % n) * h;
      idx /= n;
    }
    return x;
  }
};

// Node indices whose coordinates lie in the closed axis box [blo, bhi].
template <typename T = double>
std::vector<long> nodes_in_box(const GridGeom<T>& g, const VectorX<T>& blo,
                               const VectorX<T>& bhi) {
  std::vector<long> out;
  for (long i = 0; i < g.size(); ++i) {
    VectorX<T> x = g.node(i);
    bool in = true;
    for (int a = 0; a < g.dim && in; ++a) in = x[a] >= blo[a] && x[a] <= bhi[a];
    if (in) out.push_back(i);
  }
  return out;
}

// Node indices within distance r of a point (closed ball).
template <typename T = double>
std::vector<long> nodes_in_ball(const GridGeom<T>& g, const VectorX<T>& c, T r) {
  std::vector<long> out;
  for (long i = 0; i < g.size(); ++i)
    if ((g.node(i) - c).norm() <= r) out.push_back(i);
  return out;
}

// Finite-difference Hamiltonian -Delta + V on a box grid: 2d+1-point stencil
// Laplacian plus the diagonal of per-cell potential averages.  The operator
// is available matrix-free (apply), as a cached sparse matrix, and - for
// small problems - as a cached full eigendecomposition.
template <typename T = double>
struct GridHamiltonian {
  BoxDomain<T> box;
  GridGeom<T> grid;
  Potential<T> potential;        // bump centers possibly nudged off nodes
  VectorX<T> vbar;               // cell-averaged potential per node
  std::vector<int> moved_bumps;  // indices of nudged singular centers

  long size() const { return grid.size(); }

  // Crude operator-norm bound, used to scale tolerances.
  T scale() const {
    T v = vbar.size() ? vbar.cwiseAbs().maxCoeff() : T(0);
    return 4 * grid.dim / (grid.h * grid.h) + v;
  }

  template <typename Derived>
  VectorX<T> apply(const Eigen::MatrixBase<Derived>& u) const {
    const long total = size();
    if (u.size() != total) throw ValidationError("bad-parameter", "vector/grid size mismatch");
    const int n = grid.n;
    const T w = -1 / (grid.h * grid.h);
    VectorX<T> out = (2 * grid.dim / (grid.h * grid.h)) * u + vbar.cwiseProduct(u);
    for (long idx = 0; idx < total; ++idx) {
      long rem = idx, s = 1;
      T acc = 0;
      for (int a = 0; a < grid.dim; ++a) {
        int ia = static_cast<int>(rem % n);
        if (ia > 0)
          acc += u[idx - s];
        else if (grid.bc == Bc::periodic)
          acc += u[idx + static_cast<long>(n - 1) * s];
        if (ia + 1 < n)
          acc += u[idx + s];
        else if (grid.bc == Bc::periodic)
          acc += u[idx - static_cast<long>(n - 1) * s];
        rem /= n;
        s *= n;
      }
      out[idx] += w * acc;
    }
    return out;
  }

  const Eigen::SparseMatrix<T>& sparse() const {
    if (!sparse_) {
      const long total = size();
      const int n = grid.n;
      const T w = -1 / (grid.h * grid.h), dg = 2 * grid.dim / (grid.h * grid.h);
      std::vector<Eigen::Triplet<T>> trip;
      trip.reserve(static_cast<size_t>(total) * (2 * grid.dim + 1));
      for (long idx = 0; idx < total; ++idx) {
        trip.emplace_back(idx, idx, dg + vbar[idx]);
        long rem = idx, s = 1;
        for (int a = 0; a < grid.dim; ++a) {
          int ia = static_cast<int>(rem % n);
          if (ia > 0)
            trip.emplace_back(idx, idx - s, w);
          else if (grid.bc == Bc::periodic && n > 2)
            trip.emplace_back(idx, idx + static_cast<long>(n - 1) * s, w);
          if (ia + 1 < n)
            trip.emplace_back(idx, idx + s, w);
          else if (grid.bc == Bc::periodic && n > 2)
            trip.emplace_back(idx, idx - static_cast<long>(n - 1) * s, w);
          rem /= n;
          s *= n;
        }
      }
      auto sp = std::make_shared<Eigen::SparseMatrix<T>>(total, total);
      sp->setFromTriplets(trip.begin(), trip.end());
      sparse_ = std::move(sp);
    }
    return *sparse_;
  }

  struct Dense {
    VectorX<T> values;   // ascending
    MatrixX<T> vectors;  // Euclid-orthonormal columns
  };

  const Dense& dense_eigs() const {
    if (!dense_) {
      if (size() > kDenseNodeCap)
        throw CapacityError("grid-too-large", "dense decomposition beyond the desk cap");
      MatrixX<T> a = MatrixX<T>(sparse());
      Eigen::SelfAdjointEigenSolver<MatrixX<T>> es(a);
      if (es.info() != Eigen::Success)
        throw NumericalError("eigensolver-failure", "dense symmetric decomposition failed");
      dense_ = std::make_shared<Dense>(Dense{es.eigenvalues(), es.eigenvectors()});
    }
    return *dense_;
  }

  bool has_dense() const { return static_cast<bool>(dense_); }

 private:
  mutable std::shared_ptr<Eigen::SparseMatrix<T>> sparse_;
  mutable std::shared_ptr<Dense> dense_;
};

// Build the grid Hamiltonian.  Singular centers that sit exactly on a node
// are nudged by half a cell along axis 0 (recorded in moved_bumps) so the
// diagonal sees the cell average rather than a pointwise infinity.  The node
// count is checked against the cap before anything is allocated.
template <typename T = double>
GridHamiltonian<T> assemble_hamiltonian(const Potential<T>& v, const BoxDomain<T>& box,
                                        int n, Bc bc, long node_cap = kGridNodeCap) {
  const int d = box.dim();
  require_dim(d, 1, 3);
  if (v.dim() != d)
    throw ValidationError("unsupported-dimension", "potential and box dimensions differ");
  if (!(box.side > 0)) throw ValidationError("bad-parameter", "box side must be > 0");
  if (n < (d == 1 ? 2 : 8))
    throw ValidationError("bad-parameter",
                          "need n >= 8 nodes per side (n >= 2 in the 1D embedding)");
  long total = 1;
  for (int a = 0; a < d; ++a) {
    total *= n;
    if (total > node_cap)
      throw CapacityError("grid-too-large", std::to_string(n) + "^" + std::to_string(d) +
                                                " nodes exceed the cap " +
                                                std::to_string(node_cap));
  }

  GridHamiltonian<T> out;
  out.box = box;
  out.grid.lo = box.lower();
  out.grid.side = box.side;
  out.grid.n = n;
  out.grid.dim = d;
  out.grid.bc = bc;
  out.grid.h = bc == Bc::dirichlet ? box.side / (n + 1) : box.side / n;
  const T h = out.grid.h, off = out.grid.first_offset();

  // Nudge singular centers off grid nodes.
  std::vector<PowerBump<T>> bumps = v.bumps();
  for (size_t b = 0; b < bumps.size(); ++b) {
    bool on_node = true;
    for (int a = 0; a < d && on_node; ++a) {
      T t = (bumps[b].center[a] - out.grid.lo[a] - off) / h;
      T k = std::round(t);
      on_node = k >= 0 && k < n && std::abs(t - k) * h < 1e-9 * h;
    }
    if (on_node) {
      bumps[b].center[0] += h / 2;
      out.moved_bumps.push_back(static_cast<int>(b));
    }
  }
  if (out.moved_bumps.empty()) {
    out.potential = v;
  } else {
    typename Potential<T>::Field f;
    if (v.has_bounded()) f = [v](const VectorX<T>& x) { return v.bounded_part(x); };
    out.potential = Potential<T>(d, v.p(), v.k1(), std::move(f), std::move(bumps));
  }

  out.vbar.resize(total);
  for (long idx = 0; idx < total; ++idx) {
    VectorX<T> x = out.grid.node(idx);
    if (d == 1) {
      out.vbar[idx] = out.potential.cell_average(x[0] - h / 2, x[0] + h / 2);
    } else {
      VectorX<T> clo = x.array() - h / 2, chi = x.array() + h / 2;
      out.vbar[idx] = out.potential.cell_average_box(clo, chi);
    }
    if (!std::isfinite(out.vbar[idx]))
      throw NumericalError("potential-rejected",
                           "non-finite cell average at node " + std::to_string(idx));
  }
  return out;
}

namespace detail {

// Number of eigenvalues of H strictly below sigma, by the inertia of the
// LDL^T factorization of H - sigma I (a congruence, so signs are preserved).
// Near-zero pivots trigger a deterministic downward nudge of sigma at the
// 1e-9 * scale level, consistent with the window tie tolerance.
template <typename T>
long count_below_sparse(const GridHamiltonian<T>& ham, T sigma) {
  Eigen::SparseMatrix<T> b = ham.sparse();
  const long total = b.rows();
  for (long i = 0; i < total; ++i) b.coeffRef(i, i) -= sigma;
  const T scl = std::max(ham.scale(), std::abs(sigma));
  for (int trial = 0; trial < 6; ++trial) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<T>> ldlt(b);
    if (ldlt.info() == Eigen::Success) {
      VectorX<T> dv = ldlt.vectorD();
      const T tiny = scl * T(1e-12);
      long neg = 0;
      bool clean = true;
      for (long i = 0; i < total && clean; ++i) {
        if (std::abs(dv[i]) < tiny)
          clean = false;
        else if (dv[i] < 0)
          ++neg;
      }
      if (clean) return neg;
    }
    T bump = scl * T(5e-10) * (trial + 1);
    for (long i = 0; i < total; ++i) b.coeffRef(i, i) -= bump;
  }
  throw NumericalError("factorization-failure", "inertia count did not stabilize");
}

// All eigenpairs in [a, b] by blocked shift-invert subspace iteration at the
// window midpoint, verified against the inertia count `want`.  Columns come
// back Euclid-orthonormal with eigenvalues ascending.
template <typename T>
void window_pairs_sparse(const GridHamiltonian<T>& ham, T a, T b, long want, int max_iters,
                         T res_tol, VectorX<T>& values, MatrixX<T>& vectors) {
  const long total = ham.size();
  const T scl = ham.scale();
  const long cols = std::min<long>(total, want + 4);
  Eigen::SparseMatrix<T> shifted = ham.sparse();
  T sigma = (a + b) / 2;
  for (long i = 0; i < total; ++i) shifted.coeffRef(i, i) -= sigma;
  Eigen::SparseLU<Eigen::SparseMatrix<T>> lu;
  lu.analyzePattern(shifted);
  lu.factorize(shifted);
  for (int trial = 0; lu.info() != Eigen::Success && trial < 4; ++trial) {
    // sigma collided with an eigenvalue; slide it deterministically
    T bump = (b - a) * T(1e-3) * (trial + 1) + scl * T(1e-12);
    for (long i = 0; i < total; ++i) shifted.coeffRef(i, i) -= bump;
    lu.factorize(shifted);
  }
  if (lu.info() != Eigen::Success)
    throw NumericalError("factorization-failure", "shifted factorization failed");

  MatrixX<T> x(total, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < total; ++i)
      x(i, j) = std::sin(T(0.6180339887498949) * static_cast<T>((i + 1) * (j + 1)) +
                         T(0.25) * static_cast<T>(j + 1));
  const auto& full = ham.sparse();
  for (int it = 0; it < max_iters; ++it) {
    x = lu.solve(x);
    Eigen::HouseholderQR<MatrixX<T>> qr(x);
    MatrixX<T> q = qr.householderQ() * MatrixX<T>::Identity(total, cols);
    MatrixX<T> hq = full * q;
    MatrixX<T> s = q.transpose() * hq;
    s = ((s + s.transpose()) / 2).eval();
    Eigen::SelfAdjointEigenSolver<MatrixX<T>> small(s);
    MatrixX<T> z = q * small.eigenvectors();
    VectorX<T> ritz = small.eigenvalues();
    std::vector<long> sel;
    for (long j = 0; j < cols; ++j)
      if (ritz[j] >= a && ritz[j] <= b) sel.push_back(j);
    if (static_cast<long>(sel.size()) == want) {
      bool ok = true;
      for (long j : sel) {
        T r = (full * z.col(j) - ritz[j] * z.col(j)).norm();
        if (r > res_tol * scl) {
          ok = false;
          break;
        }
      }
      if (ok) {
        values.resize(want);
        vectors.resize(total, want);
        for (long k = 0; k < want; ++k) {
          values[k] = ritz[sel[k]];
          vectors.col(k) = z.col(sel[k]);
        }
        return;
      }
    }
    x = z;
  }
  throw NumericalError("no-convergence", "window eigensolve did not converge");
}

}  // namespace detail

// Eigenvalues within 1e-9 of a window edge count as inside, matching the
// 1D window-count convention.
template <typename T>
inline constexpr T kWindowTie = T(1e-9);

template <typename T>
void check_band(const GridGeom<T>& g, T top) {
  T trust = T(0.5) / (g.h * g.h);
  if (top > trust)
    throw NumericalError("band-error", "window top " + std::to_string(top) +
                                           " exceeds the trustworthy band 0.5/h^2 = " +
                                           std::to_string(trust));
}

// Number of eigenvalues in [e - tie, e + eps + tie], without computing
// vectors: a dense filter when the full decomposition is small or already
// cached, otherwise two sparse inertia counts.
template <typename T = double>
long window_count(const GridHamiltonian<T>& ham, T e, T eps, long dense_cap = kDenseNodeCap) {
  if (!(eps > 0)) throw ValidationError("bad-parameter", "window width must be > 0");
  check_band(ham.grid, e + eps);
  const T lo = e - kWindowTie<T>, hi = e + eps + kWindowTie<T>;
  if (ham.size() <= dense_cap || ham.has_dense()) {
    const auto& de = ham.dense_eigs();
    long cnt = 0;
    for (long i = 0; i < de.values.size(); ++i)
      if (de.values[i] >= lo && de.values[i] <= hi) ++cnt;
    return cnt;
  }
  return detail::count_below_sparse(ham, hi) - detail::count_below_sparse(ham, lo);
}

// Orthonormal eigenbasis of a spectral window [E, E + eps].  Basis columns
// are normalized against the cell measure h^d and may be left empty for
// count-only use.  refined_count carries the same count on a 1.25x finer
// grid when requested, as a stability flag.
template <typename T = double>
struct SpectralWindow {
  GridGeom<T> grid;
  T e = 0;
  T eps = 0;
  long count = 0;
  VectorX<T> eigenvalues;   // ascending, size count when materialized
  MatrixX<T> basis;         // size() x count, h^d-orthonormal columns (or 0 cols)
  VectorX<T> residuals;     // ||(H - E) psi||_2 / ||psi||_2 per column
  long refined_count = -1;  // -1 = unchecked

  T cell() const { return std::pow(grid.h, grid.dim); }
  T volume() const { return std::pow(grid.side, grid.dim); }
  bool count_stable() const { return refined_count < 0 || refined_count == count; }
};

template <typename T = double>
struct EigsOptions {
  bool want_vectors = true;
  bool check_refinement = false;
  long dense_cap = kDenseNodeCap;
  T res_tol = 1e-8;
  int max_iters = 150;
};

template <typename T = double>
SpectralWindow<T> eigs_window(const GridHamiltonian<T>& ham, T e, T eps,
                              EigsOptions<T> opt = {}) {
  SpectralWindow<T> w;
  w.grid = ham.grid;
  w.e = e;
  w.eps = eps;
  w.count = window_count(ham, e, eps, opt.dense_cap);
  const T lo = e - kWindowTie<T>, hi = e + eps + kWindowTie<T>;
  if (opt.want_vectors && w.count > 0) {
    VectorX<T> vals;
    MatrixX<T> vecs;
    if (ham.size() <= opt.dense_cap || ham.has_dense()) {
      const auto& de = ham.dense_eigs();
      vals.resize(w.count);
      vecs.resize(ham.size(), w.count);
      long k = 0;
      for (long i = 0; i < de.values.size(); ++i)
        if (de.values[i] >= lo && de.values[i] <= hi) {
          vals[k] = de.values[i];
          vecs.col(k) = de.vectors.col(i);
          ++k;
        }
    } else {
      detail::window_pairs_sparse(ham, lo, hi, w.count, opt.max_iters, opt.res_tol, vals,
                                  vecs);
    }
    // Cell-measure normalization and a deterministic sign.
    const T rescale = std::pow(ham.grid.h, -T(ham.grid.dim) / 2);
    for (long j = 0; j < w.count; ++j) {
      long peak;
      vecs.col(j).cwiseAbs().maxCoeff(&peak);
      if (vecs(peak, j) < 0) vecs.col(j) = -vecs.col(j);
    }
    w.eigenvalues = vals;
    w.basis = rescale * vecs;
    w.residuals.resize(w.count);
    for (long j = 0; j < w.count; ++j) {
      VectorX<T> r = ham.apply(w.basis.col(j)) - e * w.basis.col(j);
      w.residuals[j] = r.norm() / w.basis.col(j).norm();
    }
  }
  if (opt.check_refinement) {
    int n2 = static_cast<int>(std::ceil(1.25 * ham.grid.n));
    long relaxed = static_cast<long>(std::llround(std::pow(1.25, ham.grid.dim) *
                                                  static_cast<double>(kGridNodeCap))) +
                   8;
    GridHamiltonian<T> fine =
        assemble_hamiltonian(ham.potential, ham.box, n2, ham.grid.bc, relaxed);
    w.refined_count = window_count(fine, e, eps, opt.dense_cap);
  }
  return w;
}

// DOS mass of the window, count / L^d, with a Weyl-type sanity cap on the
// cumulative count below the window top: slack * omega_d (top + theta)^{d/2}
// / (2 pi)^d plus a quantization allowance of (2/L)^d.
template <typename T = double>
struct DosNdRecord {
  long count = 0;
  T eta = 0;
  T rho_ub = 0;
  bool within_cap = true;
};

template <typename T = double>
T dos_window_nd(const SpectralWindow<T>& w, T length, int d, DosNdRecord<T>* rec = nullptr,
                T theta_hat = 0, T weyl_slack = T(1.3)) {
  require_dim(d, 1, 3);
  if (!(length > 0)) throw ValidationError("bad-parameter", "box side must be > 0");
  T eta = static_cast<T>(w.count) / std::pow(length, d);
  if (rec) {
    T top = std::max(T(0), w.e + w.eps + theta_hat);
    T ball = unit_sphere_area<T>(d) / d;  // unit-ball volume
    rec->count = w.count;
    rec->eta = eta;
    rec->rho_ub = weyl_slack * ball * std::pow(top, T(d) / 2) / std::pow(2 * kPi, d) +
                  std::pow(T(2) / length, d);
    rec->within_cap = eta <= rec->rho_ub;
  }
  return eta;
}

// Worst sup-over-L2 ratio of the window basis against the heat-kernel-style
// cap c_fit * exp(e0 + theta_hat + 1).  The cap is monotone in theta_hat, so
// over-estimating the spectral bottom can only loosen the check.
template <typename T = double>
struct SupBoundRecord {
  T worst = 0;
  T cap = 0;
  bool pass = true;
  long argmax = -1;
};

template <typename T = double>
SupBoundRecord<T> sup_bound_check(const SpectralWindow<T>& w, T theta_hat, T e0,
                                  T c_fit = 1) {
  SupBoundRecord<T> rec;
  rec.cap = c_fit * std::exp(e0 + theta_hat + 1);
  const T cell = std::sqrt(w.cell());
  for (long j = 0; j < w.basis.cols(); ++j) {
    T l2 = cell * w.basis.col(j).norm();
    if (l2 == 0) continue;
    T ratio = w.basis.col(j).cwiseAbs().maxCoeff() / l2;
    if (ratio > rec.worst) {
      rec.worst = ratio;
      rec.argmax = j;
    }
  }
  rec.pass = rec.worst <= rec.cap;
  return rec;
}

// Peak a vector of the span on the kernel diagonal: psi0 = sum_i e_i(x*) e_i
// with x* the argmax of K(x) = sum_i e_i(x)^2.  Since the weighted average of
// K equals dim/|Λ| by orthonormality, the certificate ||psi0||_inf^2 >=
// (dim/|Λ|) ||psi0||_2^2 holds by construction; pass records it.
template <typename T = double>
struct PeakedVector {
  VectorX<T> psi;
  long peak = -1;
  T kernel_max = 0;
  T certificate_lhs = 0;  // ||psi0||_inf^2
  T certificate_rhs = 0;  // (dim / |Λ|) ||psi0||_2^2
  bool pass = true;
};

template <typename T = double>
PeakedVector<T> peaked_vector(const MatrixX<T>& basis, const VectorX<T>& weights) {
  if (basis.cols() == 0)
    throw ValidationError("empty-subspace", "peaked vector needs a nonempty basis");
  if (basis.rows() != weights.size())
    throw ValidationError("bad-parameter", "basis/weights size mismatch");
  if (weights.minCoeff() <= 0)
    throw ValidationError("bad-parameter", "quadrature weights must be positive");
  MatrixX<T> gram = basis.transpose() * weights.asDiagonal() * basis;
  gram -= MatrixX<T>::Identity(basis.cols(), basis.cols());
  if (gram.cwiseAbs().maxCoeff() > 1e-6)
    throw ValidationError("bad-parameter", "basis not orthonormal under the given weights");

  PeakedVector<T> out;
  VectorX<T> kernel = basis.rowwise().squaredNorm();
  out.kernel_max = kernel.maxCoeff(&out.peak);
  out.psi = basis * basis.row(out.peak).transpose();
  out.certificate_lhs = std::pow(out.psi.cwiseAbs().maxCoeff(), 2);
  T norm2 = out.psi.cwiseProduct(out.psi).dot(weights);
  out.certificate_rhs = static_cast<T>(basis.cols()) / weights.sum() * norm2;
  out.pass = out.certificate_lhs >= out.certificate_rhs;
  return out;
}

}  // namespace doslab
