#pragma once

#include <cmath>
#include <functional>

#include "doslab/decompose.hpp"
#include "doslab/harmonic.hpp"
#include "doslab/potentials.hpp"
#include "doslab/quadrature.hpp"
#include "doslab/types.hpp"

namespace doslab {

// Dirichlet Green's function of the Laplacian on the ball B(0, r), written in
// the symmetric form G(x, y) = Phi(|x - y|) - Phi(sqrt(|x|^2|y|^2/r^2
// - 2 x.y + r^2)); the second argument is the image distance, which stays
// positive down to y = 0 and matches |x - y| exactly on the boundary.
template <typename T = double>
T green_function(int d, T r, const VectorX<T>& x, const VectorX<T>& y) {
  require_dim(d);
  if (r <= 0) throw ValidationError("bad-region", "ball radius must be > 0");
  T x2 = x.squaredNorm(), y2 = y.squaredNorm();
  if (x2 > r * r * (1 + 1e-12) || y2 > r * r * (1 + 1e-12))
    throw ValidationError("point-outside-domain", "green_function arguments must lie in the ball");
  T direct = (x - y).norm();
  if (direct <= 0)
    throw NumericalError("singular-point", "green_function diverges on the diagonal");
  T image = std::sqrt(std::max(T(0), x2 * y2 / (r * r) - 2 * x.dot(y) + r * r));
  return fundamental_solution_radial<T>(d, direct) -
         fundamental_solution_radial<T>(d, image);
}

// Poisson kernel (r^2 - |x|^2) / (d omega_d r |x - zeta|^d) for zeta on the
// boundary sphere.
template <typename T = double>
T poisson_kernel(int d, T r, const VectorX<T>& x, const VectorX<T>& zeta) {
  require_dim(d);
  T num = r * r - x.squaredNorm();
  T dist = (x - zeta).norm();
  if (dist <= 0) throw NumericalError("singular-point", "kernel point on the boundary");
  return num / (unit_sphere_area<T>(d) * r * std::pow(dist, d));
}

// Harmonic extension of boundary data g into the ball, by quadrature of the
// Poisson kernel over the boundary sphere.
template <typename T = double, typename G>
T poisson_extend(int d, T r, G&& g, const VectorX<T>& x, int n_polar = 64,
                 int n_azimuth = 0) {
  if (x.squaredNorm() >= r * r)
    throw ValidationError("point-outside-domain", "extension point must be interior");
  SphereRule<T> bdry = sphere_rule<T>(d, VectorX<T>::Zero(d), r, n_polar, n_azimuth);
  T acc = 0;
  for (int j = 0; j < bdry.count(); ++j) {
    VectorX<T> zeta = bdry.nodes.col(j);
    acc += bdry.weights[j] * poisson_kernel<T>(d, r, x, zeta) * g(zeta);
  }
  return acc;
}

// Harmonic extension of boundary data as a truncated solid-harmonic series:
// project g degree by degree on the boundary sphere and sum the harmonic
// polynomials.  Unlike kernel quadrature this stays uniformly accurate up to
// the boundary, where the Poisson kernel degenerates into a spike no fixed
// rule can resolve.
template <typename T = double>
struct HarmonicExtension {
  HarmonicSum<T> series;
  T boundary_residual = 0;  // sup over the rule nodes of |g - series|

  T operator()(const VectorX<T>& x) const { return series(x); }
};

template <typename T = double>
HarmonicExtension<T> harmonic_extension(int d, T r,
                                        const std::function<T(const VectorX<T>&)>& g,
                                        int max_degree = 0, int n_polar = 0) {
  require_dim(d);
  if (max_degree <= 0) max_degree = d == 2 ? 40 : 24;
  if (max_degree > kMaxHarmonicDegree)
    throw ValidationError("bad-degree", "extension degree above the basis cap");
  if (n_polar <= 0) n_polar = d == 2 ? 256 : 2 * max_degree + 4;
  SphereRule<T> bdry = sphere_rule<T>(d, VectorX<T>::Zero(d), r, n_polar);
  VectorX<T> gvals(bdry.count());
  for (int j = 0; j < bdry.count(); ++j) gvals[j] = g(VectorX<T>(bdry.nodes.col(j)));
  HarmonicExtension<T> out;
  for (int m = 0; m <= max_degree; ++m)
    out.series.terms.push_back(project_harmonic(bdry, gvals, m));
  for (int j = 0; j < bdry.count(); ++j) {
    T res = std::abs(gvals[j] - out.series(VectorX<T>(bdry.nodes.col(j))));
    out.boundary_residual = std::max(out.boundary_residual, res);
  }
  return out;
}

// L^q norm of G(x, .) over the ball, via the x-centered polar rule (the
// radial Jacobian tames the diagonal singularity for the admissible q < d/(d-2)).
template <typename T = double>
T green_lq_norm(int d, T r, const VectorX<T>& x, T q, int n_radial = 48,
                int n_angular = 0) {
  if (q < 1) throw ValidationError("inadmissible-exponent", "q must be >= 1");
  if (n_angular == 0) n_angular = d == 2 ? 64 : 16;
  auto f = [&](const VectorX<T>& y) {
    return std::pow(std::abs(green_function<T>(d, r, x, y)), q);
  };
  auto one = [](T) { return T(1); };
  T integral =
      polar_integral_at<T>(d, VectorX<T>::Zero(d), r, x, f, one, n_radial, n_angular);
  return std::pow(integral, 1 / q);
}

namespace detail {

// [lo, hi] portion of the ray c + t w, t >= 0, inside the ball B(0, r);
// empty range collapses to lo == hi.
template <typename T>
void ray_ball_clip(const VectorX<T>& c, const VectorX<T>& w, T r, T& lo, T& hi) {
  T b = c.dot(w);
  T disc = b * b - c.squaredNorm() + r * r;
  lo = hi = 0;
  if (disc <= 0) return;
  T root = std::sqrt(disc);
  lo = std::max(T(0), -b - root);
  hi = std::max(T(0), -b + root);
}

}  // namespace detail

// Upper bound for || W ||_{L^p(B(0, r))}: quadrature of the bounded part plus
// the exact power-law mass of each bump clipped to the ball (triangle
// inequality across the two parts, so the bound is one-sided by design).
template <typename T = double>
T lp_norm_ball(const Potential<T>& W, T r, int n_radial = 32, int n_angular = 0) {
  const int d = W.dim();
  const T p = W.p();
  if (n_angular == 0) n_angular = d == 2 ? 64 : 12;
  BallRule<T> rule = ball_rule<T>(d, VectorX<T>::Zero(d), r, n_radial, n_angular);
  T bounded_mass = 0;
  for (int j = 0; j < rule.count(); ++j) {
    T v = std::abs(W.bounded_part(VectorX<T>(rule.nodes.col(j))));
    bounded_mass += rule.weights[j] * std::pow(v, p);
  }
  T total = std::pow(bounded_mass, 1 / p);
  SphereRule<T> ang =
      sphere_rule<T>(d, VectorX<T>::Zero(d), T(1), d == 2 ? 256 : 48);
  for (const auto& b : W.bumps()) {
    T q = b.alpha * p;
    T e = d - q;  // > 0 by admissibility
    T mass = 0;
    for (int j = 0; j < ang.count(); ++j) {
      T lo, hi;
      detail::ray_ball_clip<T>(b.center, VectorX<T>(ang.nodes.col(j)), r, lo, hi);
      lo = std::min(lo, b.cutoff);
      hi = std::min(hi, b.cutoff);
      if (hi > lo) mass += ang.weights[j] * (std::pow(hi, e) - std::pow(lo, e)) / e;
    }
    total += std::abs(b.amplitude) * std::pow(mass, 1 / p);
  }
  return total;
}

// Contraction figure kappa = sup_x ||G(x,.)||_q * ||W||_p on B(0, r), with
// q the conjugate exponent of W's p and the sup scanned over a radial grid
// (the norm depends on |x| only).
template <typename T = double>
T kappa_hat(const Potential<T>& W, T r, int n_scan = 9, int n_radial = 48,
            int n_angular = 0) {
  if (W.p() <= 1)
    throw ValidationError("inadmissible-exponent", "conjugate exponent needs p > 1");
  const int d = W.dim();
  require_dim(d);
  T q = W.p() / (W.p() - 1);
  T sup = 0;
  VectorX<T> x = VectorX<T>::Zero(d);
  for (int i = 0; i < n_scan; ++i) {
    x[0] = r * T(0.9) * i / std::max(1, n_scan - 1);
    sup = std::max(sup, green_lq_norm<T>(d, r, x, q, n_radial, n_angular));
  }
  return sup * lp_norm_ball<T>(W, r);
}

struct SolveOptions {
  int n_radial = 24;
  int n_angular = 0;       // 0: dimension default (64 in d = 2, 8 in d = 3)
  int extension_degree = 0;  // 0: dimension default for the boundary series
  double boundary_tol = 1e-8;
  double tol = 1e-10;
  int max_iter = 200;
};

template <typename T = double>
struct DirichletResult {
  BallSample<T> phi;  // solution values at the ball nodes; field = off-node evaluator
  T kappa = 0;
  int iterations = 0;
  T observed_contraction = 0;  // worst ratio of successive sup-norm updates
  T final_update = 0;
};

// Solve -laplace(phi) + W phi = 0 in B(0, r) with phi = g on the boundary, by
// fixed-point iteration phi <- Pg - integral of G W phi. The quadrature of the
// Green kernel subtracts the diagonal: the analytically known mass
// integral of G(x, .) = (r^2 - |x|^2)/(2d) absorbs the singular part.
template <typename T = double>
DirichletResult<T> dirichlet_solve(const Potential<T>& W, T r,
                                   std::function<T(const VectorX<T>&)> g,
                                   SolveOptions opt = {}) {
  const int d = W.dim();
  require_dim(d);
  if (r <= 0) throw ValidationError("bad-region", "ball radius must be > 0");
  DirichletResult<T> out;
  out.kappa = kappa_hat<T>(W, r);
  if (out.kappa >= 1)
    throw NumericalError("no-contraction",
                         "kappa = " + std::to_string(out.kappa) + " >= 1 on this ball");

  HarmonicExtension<T> ext = harmonic_extension<T>(d, r, g, opt.extension_degree);
  if (ext.boundary_residual > opt.boundary_tol)
    throw NumericalError("boundary-data-unresolved",
                         "harmonic series leaves residual " +
                             std::to_string(ext.boundary_residual) +
                             " on the boundary data");

  int nang = opt.n_angular > 0 ? opt.n_angular : (d == 2 ? 64 : 8);
  BallRule<T> rule = ball_rule<T>(d, VectorX<T>::Zero(d), r, opt.n_radial, nang);
  const int K = rule.count();

  VectorX<T> wvals(K), pg(K), ug(K);
  for (int j = 0; j < K; ++j) {
    VectorX<T> y = rule.nodes.col(j);
    wvals[j] = W(y);
    if (!std::isfinite(wvals[j]))
      throw NumericalError("singular-node", "potential is singular at a quadrature node");
    pg[j] = ext(y);
    ug[j] = (r * r - y.squaredNorm()) / (2 * d);
  }

  MatrixX<T> Gw(K, K);  // Gw(i, j) = w_j G(x_i, y_j), zero diagonal
  for (int i = 0; i < K; ++i) {
    Gw(i, i) = 0;
    for (int j = 0; j < K; ++j)
      if (j != i)
        Gw(i, j) = rule.weights[j] * green_function<T>(d, r, VectorX<T>(rule.nodes.col(i)),
                                                       VectorX<T>(rule.nodes.col(j)));
  }
  VectorX<T> rowsum = Gw.rowwise().sum();

  VectorX<T> phi = pg, f(K);
  T prev_update = 0;
  for (out.iterations = 1; out.iterations <= opt.max_iter; ++out.iterations) {
    f = wvals.cwiseProduct(phi);
    VectorX<T> next = pg - Gw * f + f.cwiseProduct(rowsum - ug);
    T update = (next - phi).cwiseAbs().maxCoeff();
    phi = next;
    T scale = std::max(T(1), phi.cwiseAbs().maxCoeff());
    if (out.iterations >= 2 && prev_update > 0 && update > 100 * opt.tol * scale)
      out.observed_contraction = std::max(out.observed_contraction, update / prev_update);
    prev_update = update;
    out.final_update = update;
    if (update <= opt.tol * scale) break;
  }
  if (out.final_update > opt.tol * std::max(T(1), phi.cwiseAbs().maxCoeff()))
    throw NumericalError("no-convergence", "fixed point did not reach tolerance");

  // package as a BallSample whose field solves the same fixed-point relation
  // at off-node points: a scalar linear equation in phi(x)
  out.phi.dim = d;
  out.phi.center = VectorX<T>::Zero(d);
  out.phi.radius = r;
  out.phi.nodes = rule.nodes;
  out.phi.weights = rule.weights;
  out.phi.values = phi;
  out.phi.n_radial = rule.n_radial;
  out.phi.n_angular = rule.n_angular;
  MatrixX<T> nodes = rule.nodes;
  VectorX<T> weights = rule.weights;
  Potential<T> Wc = W;
  out.phi.field = [d, r, nodes, weights, f, phi, Wc, ext](const VectorX<T>& x) {
    T x2 = x.squaredNorm();
    if (x2 >= r * r) throw ValidationError("point-outside-domain", "evaluation outside the ball");
    int K = static_cast<int>(weights.size());
    T acc = 0, s = 0;
    for (int j = 0; j < K; ++j) {
      VectorX<T> y = nodes.col(j);
      T dist2 = (x - y).squaredNorm();
      if (dist2 < 1e-26 * r * r) return phi[j];  // node hit
      T G = green_function<T>(d, r, x, VectorX<T>(y));
      acc += weights[j] * G * f[j];
      s += weights[j] * G;
    }
    T ugx = (r * r - x2) / (2 * d);
    T wx = Wc(x);
    T denom = 1 - wx * (s - ugx);
    if (!(std::abs(denom) > T(0.1)))
      throw NumericalError("no-contraction", "off-node evaluation is ill-conditioned");
    return (ext(x) - acc) / denom;
  };
  return out;
}

template <typename T = double>
struct ContractionScan {
  VectorX<T> radii;   // dyadic 2^{-j}
  VectorX<T> kappas;  // contraction figure at each radius
  T radius = 0;       // largest radius with kappa <= 1/2
  int index = -1;
};

// Scan dyadic radii r = 2^{-j} downward and report the largest with
// kappa_hat <= 1/2; throws if even the smallest scanned radius fails.
template <typename T = double>
ContractionScan<T> contraction_radius(const Potential<T>& W, int max_halvings = 10,
                                      int n_scan = 9, int n_radial = 48,
                                      int n_angular = 0) {
  ContractionScan<T> out;
  out.radii.resize(max_halvings + 1);
  out.kappas.resize(max_halvings + 1);
  for (int j = 0; j <= max_halvings; ++j) {
    T r = std::pow(T(0.5), j);
    out.radii[j] = r;
    out.kappas[j] = kappa_hat<T>(W, r, n_scan, n_radial, n_angular);
    if (out.index < 0 && out.kappas[j] <= T(0.5)) {
      out.index = j;
      out.radius = r;
    }
  }
  if (out.index < 0)
    throw NumericalError("no-contraction",
                         "no dyadic radius in range reaches kappa <= 1/2");
  return out;
}

}  // namespace doslab
