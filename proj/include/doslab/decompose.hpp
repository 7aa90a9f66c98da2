#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "doslab/harmonic.hpp"
#include "doslab/quadrature.hpp"
#include "doslab/types.hpp"

namespace doslab {

// Field samples over a ball: the polar product rule plus values, and the
// generating callable so downstream quadratures can resample at their own
// node sets (fields here are closed-form by design).
template <typename T = double>
struct BallSample {
  using Field = std::function<T(const VectorX<T>&)>;

  int dim = 2;
  VectorX<T> center;
  T radius = 0;
  MatrixX<T> nodes;    // dim x count
  VectorX<T> weights;  // sums to the ball volume
  VectorX<T> values;
  Field field;  // generator; empty if the sample was built from raw data
  int n_radial = 0, n_angular = 0;

  int count() const { return static_cast<int>(weights.size()); }

  T eval(const VectorX<T>& x) const {
    if (!field)
      throw ValidationError("sample-not-evaluable",
                            "operation requires the generating field");
    return field(x);
  }
};

template <typename T = double>
BallSample<T> sample_ball(typename BallSample<T>::Field f, int d, const VectorX<T>& center,
                          T radius, int n_radial, int n_angular) {
  BallRule<T> rule = ball_rule<T>(d, center, radius, n_radial, n_angular);
  BallSample<T> s;
  s.dim = d;
  s.center = center;
  s.radius = radius;
  s.nodes = std::move(rule.nodes);
  s.weights = std::move(rule.weights);
  s.n_radial = rule.n_radial;
  s.n_angular = rule.n_angular;
  s.values.resize(s.count());
  for (int j = 0; j < s.count(); ++j) s.values[j] = f(VectorX<T>(s.nodes.col(j)));
  s.field = std::move(f);
  return s;
}

// psi(x) = -int_{ball} f(y) Phi(x - y) dy for the sampled density f, via the
// polar rule centered at x: the rho^{d-1} Jacobian cancels the kernel
// singularity analytically, so no subtraction is needed.
template <typename T = double>
T newtonian_potential(const BallSample<T>& f, const VectorX<T>& x) {
  if ((x - f.center).norm() >= f.radius)
    throw ValidationError("point-outside-domain",
                          "evaluation point must lie inside the sampled ball");
  const int d = f.dim;
  auto kernel = [&](T rho) { return fundamental_solution_radial<T>(d, rho); };
  auto density = [&](const VectorX<T>& y) { return f.eval(y); };
  return -polar_integral_at<T>(d, f.center, f.radius, x, density, kernel, f.n_radial,
                               f.n_angular);
}

// h = phi - psi together with a mean-value-property residual: the worst
// relative defect |h(c) - mean of h on a sphere around c| over a deterministic
// family of interior test spheres.
template <typename T = double>
struct HarmonicPartResult {
  BallSample<T> h;
  T mean_value_residual = 0;
};

template <typename T = double>
HarmonicPartResult<T> harmonic_part(const BallSample<T>& phi,
                                    typename BallSample<T>::Field psi) {
  HarmonicPartResult<T> out;
  out.h = phi;
  for (int j = 0; j < phi.count(); ++j)
    out.h.values[j] = phi.values[j] - psi(VectorX<T>(phi.nodes.col(j)));
  auto phi_field = phi.field;  // capture by value; phi may go out of scope
  auto h_field = [phi_field, psi](const VectorX<T>& x) {
    return phi_field(x) - psi(x);
  };
  out.h.field = h_field;

  const int d = phi.dim;
  T sup_h = out.h.values.cwiseAbs().maxCoeff();
  if (sup_h == 0) return out;
  T worst = 0;
  // test spheres: center plus two rings of offsets, radius a quarter of the
  // distance to the boundary
  std::vector<VectorX<T>> centers{phi.center};
  for (T frac : {T(0.3), T(0.55)}) {
    SphereRule<T> ring = sphere_rule<T>(d, phi.center, frac * phi.radius, d == 2 ? 8 : 4, 6);
    for (int j = 0; j < ring.count(); ++j) centers.push_back(ring.nodes.col(j));
  }
  for (const auto& c : centers) {
    T room = phi.radius - (c - phi.center).norm();
    SphereRule<T> probe = sphere_rule<T>(d, c, T(0.25) * room, d == 2 ? 32 : 12, 24);
    T mean = sphere_integral(probe, h_field) / probe.weights.sum();
    worst = std::max(worst, std::abs(h_field(c) - mean) / sup_h);
  }
  out.mean_value_residual = worst;
  return out;
}

// Leading-order regression: slope of log(max on sphere of |phi|) against
// log(radius) over >= 4 dyadic probe spheres around x0, rounded to the
// nearest integer.
template <typename T = double>
struct VanishingOrderResult {
  int order = 0;
  T slope = 0;
  T fit_residual = 0;   // rms deviation of the log-log fit
  VectorX<T> radii, sphere_sup;
};

template <typename T = double>
VanishingOrderResult<T> vanishing_order(const BallSample<T>& phi, const VectorX<T>& x0,
                                        int n_spheres = 4) {
  if (n_spheres < 4)
    throw ValidationError("bad-parameter", "need at least 4 probe spheres");
  const int d = phi.dim;
  T room = phi.radius - (x0 - phi.center).norm();
  if (room <= 0)
    throw ValidationError("point-outside-domain", "probe center outside the ball");
  T scale = phi.values.cwiseAbs().maxCoeff();
  VanishingOrderResult<T> out;
  out.radii.resize(n_spheres);
  out.sphere_sup.resize(n_spheres);
  T rho0 = T(0.3) * room;
  for (int j = 0; j < n_spheres; ++j) {
    T rho = rho0 * std::pow(T(0.5), j);
    SphereRule<T> probe = sphere_rule<T>(d, x0, rho, d == 2 ? 48 : 16, 32);
    T sup = 0;
    for (int i = 0; i < probe.count(); ++i)
      sup = std::max(sup, std::abs(phi.eval(VectorX<T>(probe.nodes.col(i)))));
    out.radii[j] = rho;
    out.sphere_sup[j] = sup;
  }
  if (scale < 1e-300 || out.sphere_sup.maxCoeff() < 1e-12 * scale)
    throw NumericalError("undefined-order", "field vanishes identically at probe scale");
  // least squares in log-log
  VectorX<T> lx(n_spheres), ly(n_spheres);
  for (int j = 0; j < n_spheres; ++j) {
    lx[j] = std::log(out.radii[j]);
    ly[j] = std::log(std::max(out.sphere_sup[j], T(1e-300)));
  }
  T mx = lx.mean(), my = ly.mean();
  T sxx = (lx.array() - mx).square().sum();
  out.slope = ((lx.array() - mx) * (ly.array() - my)).sum() / sxx;
  out.order = static_cast<int>(std::lround(out.slope));
  T ss = 0;
  for (int j = 0; j < n_spheres; ++j) {
    T pred = my + out.slope * (lx[j] - mx);
    ss += (ly[j] - pred) * (ly[j] - pred);
  }
  out.fit_residual = std::sqrt(ss / n_spheres);
  return out;
}

// Output of the degree-N truncation: harmonic and potential-part components
// per degree, their degree-N sum, and remainder samples on a probe sphere.
template <typename T = double>
struct DecompositionResult {
  int N = 0;
  std::vector<HarmonicPoly<T>> h_components;    // projections of phi - psi
  std::vector<HarmonicPoly<T>> psi_components;  // expansion moments of the source
  HarmonicPoly<T> YN;                           // degree-N component of the sum
  HarmonicSum<T> truncation;                    // sum over degrees <= N
  SphereRule<T> probe;
  VectorX<T> remainder;             // phi - truncation on the probe sphere
  T lower_degree_residual = 0;      // sup of |h_m + psi_m| on the probe sphere, m < N
};

struct DecomposeOptions {
  double probe_radius_frac = 1.0 / 6.0;  // probe sphere radius / ball radius
  double proj_radius_frac = 0.5;         // projection sphere for the harmonic part
  double vanish_tol = 1e-6;              // gate on degree-< N content of phi
};

// Truncation map: phi (a sampled solution with phi = O(|x - c|^N)) and the
// multiplier W produce harmonic components h_m of phi - psi and moment
// components psi_m of the source W phi, with Y_N their degree-N part.
template <typename T = double>
DecompositionResult<T> compute_YN(const BallSample<T>& phi,
                                  typename BallSample<T>::Field W, int N,
                                  const DecomposeOptions& opt = {}) {
  const int d = phi.dim;
  if (N < 0 || N > kMaxHarmonicDegree)
    throw ValidationError("bad-degree", "truncation degree outside [0, 60]");
  DecompositionResult<T> out;
  out.N = N;
  const VectorX<T>& c = phi.center;

  // gate: degree-< N content of phi on a small probe sphere must be tiny
  T rho_probe = opt.probe_radius_frac * phi.radius;
  out.probe = sphere_rule<T>(d, c, rho_probe, d == 2 ? 64 : 24, 48);
  VectorX<T> phi_probe(out.probe.count());
  for (int j = 0; j < out.probe.count(); ++j)
    phi_probe[j] = phi.eval(VectorX<T>(out.probe.nodes.col(j)));
  T sup_probe = phi_probe.cwiseAbs().maxCoeff();
  for (int m = 0; m < N; ++m) {
    HarmonicPoly<T> pm = project_harmonic(out.probe, phi_probe, m);
    T sup_pm = 0;
    for (int j = 0; j < out.probe.count(); ++j)
      sup_pm = std::max(sup_pm, std::abs(pm(VectorX<T>(out.probe.nodes.col(j) - c))));
    if (sup_pm > opt.vanish_tol * std::max(sup_probe, T(1e-300)))
      throw ValidationError("order-mismatch",
                            "degree-" + std::to_string(m) +
                                " content exceeds tolerance; vanishing order < N");
  }

  // moment components of the source: psi_m coefficients are
  // -sum_j w_j (W phi)(y_j) j_{m,i}(y_j - c), with j_{m,i} the expansion
  // coefficients of Phi((x - c) - (y - c)) around the center.
  std::vector<VectorX<T>> psi_coeffs(N + 1);
  for (int m = 0; m <= N; ++m) psi_coeffs[m] = VectorX<T>::Zero(dim_component(d, m));
  for (int j = 0; j < phi.count(); ++j) {
    VectorX<T> y = phi.nodes.col(j);
    T src = phi.weights[j] * W(y) * phi.values[j];
    if (src == 0) continue;
    auto terms = expand_fundamental<T>(d, VectorX<T>(y - c), N);
    for (int m = 0; m <= N; ++m) psi_coeffs[m] -= src * terms[m].coeffs;
  }
  for (int m = 0; m <= N; ++m)
    out.psi_components.emplace_back(d, m, std::move(psi_coeffs[m]));

  // harmonic components of h = phi - psi, projected on an interior sphere
  // each projection node costs a full polar integral, so size this rule for
  // exactness ~ degree 23 rather than matching the probe resolution
  T s_proj = opt.proj_radius_frac * phi.radius;
  SphereRule<T> proj = sphere_rule<T>(d, c, s_proj, d == 2 ? 64 : 12, 24);
  VectorX<T> h_vals(proj.count());
  for (int j = 0; j < proj.count(); ++j) {
    VectorX<T> x = proj.nodes.col(j);
    T psi_x = 0;
    {
      auto kernel = [&](T rho) { return fundamental_solution_radial<T>(d, rho); };
      auto density = [&](const VectorX<T>& y) { return W(y) * phi.eval(y); };
      psi_x = -polar_integral_at<T>(d, phi.center, phi.radius, x, density, kernel,
                                    phi.n_radial, phi.n_angular);
    }
    h_vals[j] = phi.eval(x) - psi_x;
  }
  for (int m = 0; m <= N; ++m)
    out.h_components.push_back(project_harmonic(proj, h_vals, m));

  // assemble the truncation and its degree-N part
  for (int m = 0; m <= N; ++m) {
    VectorX<T> sum = out.h_components[m].coeffs + out.psi_components[m].coeffs;
    out.truncation.terms.emplace_back(d, m, sum);
  }
  out.YN = out.truncation.terms.back();

  T lower = 0;
  for (int m = 0; m < N; ++m)
    for (int j = 0; j < out.probe.count(); ++j)
      lower = std::max(lower, std::abs(out.truncation.terms[m](
                                  VectorX<T>(out.probe.nodes.col(j) - c))));
  out.lower_degree_residual = lower;

  out.remainder.resize(out.probe.count());
  for (int j = 0; j < out.probe.count(); ++j) {
    VectorX<T> x = out.probe.nodes.col(j);
    out.remainder[j] = phi.eval(x) - out.truncation(VectorX<T>(x - c));
  }
  return out;
}

}  // namespace doslab
