#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doslab/errors.hpp"
#include "doslab/gridham.hpp"
#include "doslab/harmonic.hpp"
#include "doslab/types.hpp"

namespace doslab {

// Log-Hoelder exponent: 1 in d = 1, ((4-d)p - 2d)/(8p - 4d) for d = 2, 3.
// Requires p > 2 (d = 2) resp. p > 6 (d = 3); admissible values land in
// (0, 1/4].
template <typename T = double>
T kappa(int d, T p) {
  require_dim(d, 1, 3);
  if (d == 1) return T(1);
  if (!(p > (d == 2 ? T(2) : T(6))))
    throw ValidationError("hypothesis-violation",
                          d == 2 ? "exponent formula needs p > 2 in d = 2"
                                 : "exponent formula needs p > 6 in d = 3");
  return ((4 - d) * p - 2 * d) / (8 * p - 4 * d);
}

// Exponents of the quantitative continuation bound.
template <typename T = double>
T ucp_q_exponent(int d, T p) {
  require_dim(d);
  if (!(3 * p > 2 * d)) throw ValidationError("bad-parameter", "need 3p > 2d");
  return (4 * p - 2 * d) / (3 * p - 2 * d);
}

template <typename T = double>
T ucp_k_exponent(int d, T p) {
  require_dim(d);
  if (!(3 * p > 2 * d)) throw ValidationError("bad-parameter", "need 3p > 2d");
  return 2 * p / (3 * p - 2 * d);
}

// ceil(L/R)^d cell centers whose R-boxes cover the closed box [0, L]^d
// (coordinates relative to the lower corner).  The count always lies in
// [(L/R)^d, (2L/R)^d].
template <typename T = double>
MatrixX<T> cover_grid(T length, T radius, int d) {
  require_dim(d, 1, 3);
  if (!(radius > 0) || radius >= length)
    throw ValidationError("degenerate-cover", "need 0 < R < L for a box cover");
  int m = static_cast<int>(std::ceil(length / radius - 1e-12));
  T step = length / m;
  long total = 1;
  for (int a = 0; a < d; ++a) total *= m;
  MatrixX<T> pts(d, total);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int a = 0; a < d; ++a) {
      pts(a, idx) = (static_cast<T>(rem % m) + T(0.5)) * step;
      rem /= m;
    }
  }
  return pts;
}

// One reduction step ledger entry of the local-flatness sweep.
struct FlatnessStep {
  long center = 0;  // column index into the center list
  int imposed = 0;  // moment functionals applied at this center
  long before = 0;
  long after = 0;
  bool clipped = false;  // ball ran past the box boundary
};

template <typename T = double>
struct FlatnessResult {
  MatrixX<T> coeffs;  // window-basis coefficients, orthonormal columns
  long dimension = 0;
  bool exhausted = false;
  std::vector<FlatnessStep> ledger;
};

// Iteratively restrict the window span to the joint null space of ball-L2
// harmonic moments of degree <= N at each center: at y the functionals are
// psi -> h^d sum_{|x - y| <= r} q(x - y) psi(x) over a harmonic basis q.
// Each step can drop the dimension by at most the functional count
// dim_cumulative(d, N); surviving vectors have their low-order local
// harmonic content killed at every center, which forces a vanishing rate
// near N + 1 there.  Balls sticking out of the box are clipped and logged.
template <typename T = double>
FlatnessResult<T> local_flatness_subspace(const SpectralWindow<T>& w,
                                          const MatrixX<T>& centers, int degree, T r) {
  const int d = w.grid.dim;
  require_dim(d);
  if (!(r > 0)) throw ValidationError("bad-parameter", "ball radius must be > 0");
  if (degree < 0 || degree > kMaxHarmonicDegree)
    throw ValidationError("bad-degree", "moment degree out of range");
  if (centers.rows() != d)
    throw ValidationError("unsupported-dimension", "centers must be d x K");
  if (w.count == 0 || w.basis.cols() != w.count)
    throw ValidationError("bad-parameter", "window carries no basis vectors");

  const long m = w.count;
  const int rows_per = dim_cumulative(d, degree);
  const T cell = w.cell();
  FlatnessResult<T> out;
  out.coeffs = MatrixX<T>::Identity(m, m);
  out.dimension = m;
  for (long c = 0; c < centers.cols(); ++c) {
    VectorX<T> y = centers.col(c);
    bool clipped = false;
    for (int a = 0; a < d; ++a)
      clipped = clipped || y[a] - r < w.grid.lo[a] || y[a] + r > w.grid.lo[a] + w.grid.side;
    std::vector<long> ball = nodes_in_ball(w.grid, y, r);
    FlatnessStep step{c, rows_per, out.dimension, out.dimension, clipped};
    if (!ball.empty()) {
      const long nb = static_cast<long>(ball.size());
      MatrixX<T> hb(rows_per, nb);
      MatrixX<T> bb(nb, m);
      for (long q = 0; q < nb; ++q) {
        VectorX<T> dx = w.grid.node(ball[q]) - y;
        int row = 0;
        for (int deg = 0; deg <= degree; ++deg)
          for (int k = 0; k < dim_component(d, deg); ++k, ++row)
            hb(row, q) = solid_harmonic<T>(d, deg, k, dx);
        bb.row(q) = w.basis.row(ball[q]);
      }
      MatrixX<T> f = cell * hb * bb;
      for (int row = 0; row < rows_per; ++row) {
        T nrm = f.row(row).norm();
        if (nrm > 0) f.row(row) /= nrm;  // row scaling for a clean rank cut
      }
      MatrixX<T> restricted = f * out.coeffs;
      Eigen::JacobiSVD<MatrixX<T>> svd(restricted, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      long rank = 0;
      if (sv.size() > 0 && sv[0] > 0)
        for (long i = 0; i < sv.size(); ++i)
          if (sv[i] > 1e-10 * sv[0]) ++rank;
      out.coeffs = (out.coeffs * svd.matrixV().rightCols(out.dimension - rank)).eval();
      out.dimension -= rank;
      step.after = out.dimension;
    }
    out.ledger.push_back(step);
    if (out.dimension == 0) {
      out.exhausted = true;
      break;
    }
  }
  return out;
}

// Observation geometry of one continuation probe: a node mask Theta, a ball
// center x0 with radius delta, the mask spread Q = sup_{y in Theta} |y - x0|,
// and the potential strength K entering the exponent.
template <typename T = double>
struct UcpProbe {
  std::vector<long> theta;
  VectorX<T> x0;
  T delta = 0;
  T q = 0;
  T k = 0;
  T p = 2;
  // The continuation bound itself needs only p >= d; the log-Hoelder
  // exponent needs the stronger p > 2 (d=2) / p > 6 (d=3).  Probes carry a
  // flag instead of rejecting the gap between the two hypotheses.
  bool strong = false;
};

template <typename T = double>
UcpProbe<T> make_ucp_probe(const GridGeom<T>& g, std::vector<long> theta,
                           const VectorX<T>& x0, T delta, T k_strength, T p) {
  require_dim(g.dim);
  if (theta.empty()) throw ValidationError("bad-parameter", "empty observation mask");
  if (x0.size() != g.dim)
    throw ValidationError("unsupported-dimension", "x0 dimension mismatch");
  if (!(p >= g.dim))
    throw ValidationError("hypothesis-violation", "continuation probe needs p >= d");
  if (k_strength < 0) throw ValidationError("bad-parameter", "K must be >= 0");
  T spread = 0, dist = std::numeric_limits<T>::infinity();
  for (long i : theta) {
    if (i < 0 || i >= g.size()) throw ValidationError("bad-parameter", "mask index off grid");
    T r = (g.node(i) - x0).norm();
    spread = std::max(spread, r);
    dist = std::min(dist, r);
  }
  if (spread < 1)
    throw ValidationError("bad-parameter", "need sup_{y in Theta} |y - x0| >= 1");
  if (!(delta > 0) || delta > std::min(dist, T(0.5)))
    throw ValidationError("bad-parameter", "need 0 < delta <= min(dist(x0, Theta), 1/2)");
  for (int a = 0; a < g.dim; ++a)
    if (x0[a] - delta < g.lo[a] || x0[a] + delta > g.lo[a] + g.side)
      throw ValidationError("bad-parameter", "ball B(x0, delta) must sit inside the box");
  UcpProbe<T> probe;
  probe.theta = std::move(theta);
  probe.x0 = x0;
  probe.delta = delta;
  probe.q = spread;
  probe.k = k_strength;
  probe.p = p;
  probe.strong = g.dim == 1 || p > (g.dim == 2 ? T(2) : T(6));
  return probe;
}

// Quantitative continuation check: with zeta = (H - E) psi,
//   lhs = (delta/Q)^{m (1 + K^{2p/(3p-2d)}) (Q^{(4p-2d)/(3p-2d)} + log(||psi|| / ||psi_Theta||))} ||psi_Theta||^2
//   rhs = ||psi_{x0,delta}||^2 + delta^2 ||zeta||^2,
// pass when lhs <= rhs, margin = log(rhs/lhs).
template <typename T = double>
struct UcpRecord {
  T lhs = 0;
  T rhs = 0;
  T margin = 0;
  bool pass = false;
  T psi_theta2 = 0;
  T psi_ball2 = 0;
  T zeta2 = 0;
  T exponent = 0;
};

template <typename T = double>
UcpRecord<T> ucp_check(const GridHamiltonian<T>& ham, const VectorX<T>& psi, T e,
                       const UcpProbe<T>& probe, T m_fit) {
  const int d = ham.grid.dim;
  require_dim(d);
  if (psi.size() != ham.size())
    throw ValidationError("bad-parameter", "vector/grid size mismatch");
  if (!(m_fit > 0)) throw ValidationError("bad-parameter", "m_fit must be > 0");
  const T cell = std::pow(ham.grid.h, d);
  const T psi2 = cell * psi.squaredNorm();
  if (psi2 == 0) throw ValidationError("bad-parameter", "zero vector");

  UcpRecord<T> rec;
  for (long i : probe.theta) rec.psi_theta2 += psi[i] * psi[i];
  rec.psi_theta2 *= cell;
  if (rec.psi_theta2 <= 1e-24 * psi2)
    throw ValidationError("undefined-probe", "observation mask carries no mass of psi");
  for (long i : nodes_in_ball(ham.grid, probe.x0, probe.delta))
    rec.psi_ball2 += cell * psi[i] * psi[i];
  VectorX<T> zeta = ham.apply(psi) - e * psi;
  rec.zeta2 = cell * zeta.squaredNorm();

  T strength = 1 + std::pow(probe.k, ucp_k_exponent(d, probe.p));
  T depth = std::pow(probe.q, ucp_q_exponent(d, probe.p)) +
            std::log(std::sqrt(psi2 / rec.psi_theta2));
  rec.exponent = m_fit * strength * depth;
  rec.lhs = std::pow(probe.delta / probe.q, rec.exponent) * rec.psi_theta2;
  rec.rhs = rec.psi_ball2 + probe.delta * probe.delta * rec.zeta2;
  rec.pass = rec.lhs <= rec.rhs;
  rec.margin = rec.rhs > 0 ? std::log(rec.rhs / rec.lhs)
                           : -std::numeric_limits<T>::infinity();
  return rec;
}

// Parameter selection for the covering chain: R solves rho = c R^e with
// e = ((d-4)p + 2d)/(3p - 2d) < 0, the moment degree is
// N = floor((rho / 2^{d+1} gamma_d)^{1/(d-1)} R^{d/(d-1)}), and
// delta = (c_hat^N R)^{-1} clipped at delta0 = min(1/2, r0).
template <typename T = double>
struct RNConstants {
  T c = 1;
  T c_hat = 2;
  T r0 = T(0.5);
};

template <typename T = double>
struct RNChoice {
  T radius = 0;
  long degree = 0;
  T delta = 0;
  bool radius_ok = false;
  bool degree_ok = false;
  bool delta_ok = false;
};

template <typename T = double>
RNChoice<T> choose_R_N(T rho, int d, T p, T gamma_d, RNConstants<T> cfg = {}) {
  require_dim(d);
  if (!(rho > 0)) throw ValidationError("bad-parameter", "rho must be > 0");
  if (!(gamma_d > 0)) throw ValidationError("bad-parameter", "gamma_d must be > 0");
  kappa(d, p);  // admissibility gate
  const T expo = ((T(d) - 4) * p + 2 * d) / (3 * p - 2 * d);
  auto degree_real = [&](T rr) {
    T radius = std::pow(rr / cfg.c, 1 / expo);
    T base = rr / (std::pow(T(2), d + 1) * gamma_d);
    return std::pow(base, T(1) / (d - 1)) * std::pow(radius, T(d) / (d - 1));
  };

  RNChoice<T> out;
  out.radius = std::pow(rho / cfg.c, 1 / expo);
  T nr = degree_real(rho);
  out.degree = static_cast<long>(std::floor(nr + T(1e-9)));
  if (out.degree < 1) {
    // degree_real is strictly decreasing in rho; bisect the feasibility edge
    T good = rho;
    for (int i = 0; i < 200 && degree_real(good) < 1; ++i) good /= 2;
    T bad = rho;
    for (int i = 0; i < 80; ++i) {
      T mid = std::sqrt(good * bad);
      (degree_real(mid) >= 1 ? good : bad) = mid;
    }
    throw ValidationError("parameter-infeasible",
                          "moment degree floors to 0 at rho = " + std::to_string(rho) +
                              "; feasible for rho <= " + std::to_string(good));
  }
  T delta0 = std::min(T(0.5), cfg.r0);
  out.delta = std::min(1 / (std::pow(cfg.c_hat, static_cast<T>(out.degree)) * out.radius),
                       delta0);
  out.radius_ok = std::abs(cfg.c * std::pow(out.radius, expo) - rho) <= T(1e-9) * rho;
  out.degree_ok = out.degree >= 1 && static_cast<T>(out.degree) <= nr + T(1e-9);
  out.delta_ok = out.delta > 0 && out.delta <= delta0;
  return out;
}

// Bounded-product statistic sup eta (log 1/eps)^kappa over the rows, plus the
// least-squares slope of log eta against log log(1/eps) over the rows with
// eta > 0.  Rows must have eps in (0, 1/2] and at least 5 distinct values.
template <typename T = double>
struct LogHolderFit {
  T sup_product = 0;
  T slope = 0;
  long used = 0;  // rows entering the slope fit
};

template <typename T = double>
LogHolderFit<T> log_holder_fit(const std::vector<T>& eps, const std::vector<T>& eta, T kap) {
  if (eps.size() != eta.size())
    throw ValidationError("bad-parameter", "eps/eta column length mismatch");
  std::vector<T> uniq(eps);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < 5)
    throw ValidationError("insufficient-data", "need at least 5 dyadic epsilon values");
  LogHolderFit<T> out;
  std::vector<T> xs, ys;
  for (size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0) || eps[i] > T(0.5))
      throw ValidationError("bad-parameter", "epsilon must lie in (0, 1/2]");
    if (eta[i] < 0) throw ValidationError("bad-parameter", "eta must be >= 0");
    T lg = std::log(1 / eps[i]);
    out.sup_product = std::max(out.sup_product, eta[i] * std::pow(lg, kap));
    if (eta[i] > 0) {
      xs.push_back(std::log(lg));
      ys.push_back(std::log(eta[i]));
    }
  }
  out.used = static_cast<long>(xs.size());
  if (out.used >= 2) {
    T mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= xs.size();
    my /= xs.size();
    T sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx > 0) out.slope = sxy / sxx;
  }
  return out;
}

}  // namespace doslab
