#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "doslab/types.hpp"

namespace doslab {
namespace detail {

// Adaptive Simpson on [a, b] for continuous (piecewise-smooth) integrands.
template <typename T, typename F>
T adaptive_simpson(F&& f, T a, T b, T fa, T fm, T fb, T tol, int depth) {
  T m = (a + b) / 2;
  T lm = (a + m) / 2, rm = (m + b) / 2;
  T flm = f(lm), frm = f(rm);
  T whole = (b - a) / 6 * (fa + 4 * fm + fb);
  T left = (m - a) / 6 * (fa + 4 * flm + fm);
  T right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol)
    return left + right + (left + right - whole) / 15;
  return adaptive_simpson(f, a, m, fa, flm, fm, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, tol / 2, depth - 1);
}

template <typename T, typename F>
T integrate_1d(F&& f, T a, T b, T tol, int depth = 24) {
  T m = (a + b) / 2;
  return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, depth);
}

// Two-point Gauss per axis over a box cell.
template <typename T, typename F>
T gauss2_cell(int d, F&& f, const VectorX<T>& lo, const VectorX<T>& hi) {
  const T g = 1 / std::sqrt(T(3));
  T vol = 1;
  for (int i = 0; i < d; ++i) vol *= hi[i] - lo[i];
  const int n = 1 << d;
  T acc = 0;
  for (int mask = 0; mask < n; ++mask) {
    VectorX<T> x(d);
    for (int i = 0; i < d; ++i) {
      T mid = (lo[i] + hi[i]) / 2, half = (hi[i] - lo[i]) / 2;
      x[i] = mid + ((mask >> i) & 1 ? g : -g) * half;
    }
    acc += f(x);
  }
  return acc * vol / n;
}

// Adaptive box integration for continuous integrands (kinks allowed).
template <typename T, typename F>
T adaptive_box(int d, F&& f, const VectorX<T>& lo, const VectorX<T>& hi, T tol_density,
               int depth) {
  T coarse = gauss2_cell(d, f, lo, hi);
  VectorX<T> mid = (lo + hi) / 2;
  T vol = 1;
  for (int i = 0; i < d; ++i) vol *= hi[i] - lo[i];
  const int n = 1 << d;
  T fine = 0;
  std::vector<VectorX<T>> clos(n), chis(n);
  for (int mask = 0; mask < n; ++mask) {
    VectorX<T> clo(d), chi(d);
    for (int i = 0; i < d; ++i) {
      bool upper = (mask >> i) & 1;
      clo[i] = upper ? mid[i] : lo[i];
      chi[i] = upper ? hi[i] : mid[i];
    }
    clos[mask] = clo;
    chis[mask] = chi;
    fine += gauss2_cell(d, f, clo, chi);
  }
  if (depth <= 0 || std::abs(fine - coarse) <= tol_density * vol) return fine;
  T acc = 0;
  for (int mask = 0; mask < n; ++mask)
    acc += adaptive_box(d, f, clos[mask], chis[mask], tol_density, depth - 1);
  return acc;
}

// [tmin, tmax] of { t >= 0 : c + t w inside the box }, empty -> tmin > tmax.
template <typename T>
void ray_box_clip(int d, const VectorX<T>& c, const VectorX<T>& w, const VectorX<T>& lo,
                  const VectorX<T>& hi, T& tmin, T& tmax) {
  tmin = 0;
  tmax = std::numeric_limits<T>::infinity();
  for (int i = 0; i < d; ++i) {
    if (std::abs(w[i]) < 1e-300) {
      if (c[i] < lo[i] || c[i] > hi[i]) { tmin = 1; tmax = 0; return; }
      continue;
    }
    T t1 = (lo[i] - c[i]) / w[i], t2 = (hi[i] - c[i]) / w[i];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
  }
}

// Integral of |x - c|^{-q} chi_{|x - c| <= s} over an axis box, d in {2, 3}.
// The radial factor integrates in closed form (u(rho) = rho^{d-q}/(d-q), which
// absorbs both the singularity and the cutoff), leaving a continuous angular
// integrand built from ray-box clipping; that factor is handled adaptively.
template <typename T>
T power_cell_integral(int d, const VectorX<T>& c, T q, T s, const VectorX<T>& lo,
                      const VectorX<T>& hi, T rel_tol = 1e-9) {
  if (q >= d)
    throw NumericalError("divergent-norm",
                         "radial exponent " + std::to_string(q) + " not integrable in d = " +
                             std::to_string(d));
  const T e = T(d) - q;
  auto u = [&](T rho) { return std::pow(rho, e) / e; };
  auto shell = [&](const VectorX<T>& w) {
    T tmin, tmax;
    ray_box_clip(d, c, w, lo, hi, tmin, tmax);
    if (tmin >= tmax) return T(0);
    T hi_r = std::min(s, tmax), lo_r = std::min(s, tmin);
    return hi_r > lo_r ? u(hi_r) - u(lo_r) : T(0);
  };
  // Seen from c, the box lies inside the tangent cone of its circumscribed
  // ball.  Restricting the angular integral to that cone keeps the support
  // visible to the adaptive rule when the box is small and far from c;
  // otherwise a coarse first sampling of the full sphere can miss it.
  VectorX<T> b = (lo + hi) / 2;
  T dist = (b - c).norm(), rad = (hi - lo).norm() / 2;
  bool full = !(dist > rad);
  T alpha = full ? T(kPi)
                 : std::min(T(kPi),
                            std::asin(std::min(T(1), rad / dist)) * (1 + T(1e-12)) + T(1e-12));
  T scale = std::pow(s, e) / e;  // full-ball magnitude, for the tolerance
  if (d == 2) {
    T th0 = full ? T(kPi) : std::atan2(b[1] - c[1], b[0] - c[0]);
    auto f = [&](T th) {
      VectorX<T> w(2);
      w << std::cos(th), std::sin(th);
      return shell(w);
    };
    return integrate_1d<T>(f, th0 - alpha, th0 + alpha, rel_tol * scale, 30);
  }
  VectorX<T> axis(3);
  if (full)
    axis << 0, 0, 1;
  else
    axis = (b - c) / dist;
  VectorX<T> seed(3);
  if (std::abs(axis[0]) > T(0.9))
    seed << 0, 1, 0;
  else
    seed << 1, 0, 0;
  VectorX<T> uv = seed - seed.dot(axis) * axis;
  uv /= uv.norm();
  VectorX<T> vv(3);
  vv << axis[1] * uv[2] - axis[2] * uv[1], axis[2] * uv[0] - axis[0] * uv[2],
      axis[0] * uv[1] - axis[1] * uv[0];
  T mu_lo = std::cos(alpha);
  auto f = [&](const VectorX<T>& mp) {
    T mu = mp[0], ph = mp[1];
    T sn = std::sqrt(std::max(T(0), 1 - mu * mu));
    return shell(sn * std::cos(ph) * uv + sn * std::sin(ph) * vv + mu * axis);
  };
  VectorX<T> alo(2), ahi(2);
  alo << mu_lo, 0;
  ahi << 1, 2 * kPi;
  return adaptive_box(2, f, alo, ahi, rel_tol * scale / ((1 - mu_lo) * 2 * kPi), 16);
}

}  // namespace detail

// One radial power component a |x - c|^{-alpha} chi_{|x - c| <= s}.
// Admissible when alpha * p < d, so |.|^p is locally integrable.
template <typename T = double>
struct PowerBump {
  VectorX<T> center;
  T amplitude = 0;
  T alpha = 0;
  T cutoff = 0;

  int dim() const { return static_cast<int>(center.size()); }

  template <typename Derived>
  T eval(const Eigen::MatrixBase<Derived>& x) const {
    T r = (x - center).norm();
    if (r > cutoff) return 0;
    if (r == 0) return std::numeric_limits<T>::infinity();
    return amplitude * std::pow(r, -alpha);
  }

  // || . ||_{L^p(R^d)} in closed form:
  // |a| (d w_d s^{d - alpha p} / (d - alpha p))^{1/p}.
  T lp_norm_closed(T p) const {
    const int d = dim();
    T q = d - alpha * p;
    if (q <= 0)
      throw ValidationError("inadmissible-exponent", "alpha * p >= d has no finite norm");
    return std::abs(amplitude) *
           std::pow(unit_sphere_area<T>(d) * std::pow(cutoff, q) / q, 1 / p);
  }

  // d = 1 only: integral of the bump over [a, b] (signed), via the
  // antiderivative of |t - c|^{-alpha}.
  T segment_integral(T a, T b) const {
    if (dim() != 1) throw ValidationError("unsupported-dimension", "segment_integral is 1D");
    T c = center[0], s = cutoff;
    T lo = std::max(a, c - s), hi = std::min(b, c + s);
    if (lo >= hi) return 0;
    auto side = [&](T u, T v) {  // integral of (t - c)^{-alpha} on c <= u < v
      return (std::pow(v - c, 1 - alpha) - std::pow(u - c, 1 - alpha)) / (1 - alpha);
    };
    T acc = 0;
    if (hi > c) acc += side(std::max(lo, c), hi);
    if (lo < c) {  // mirror the left half
      T u = 2 * c - std::min(hi, c), v = 2 * c - lo;
      acc += side(u, v);
    }
    return amplitude * acc;
  }

  // Signed integral over an axis box, d >= 2.
  T box_integral(const VectorX<T>& lo, const VectorX<T>& hi, T rel_tol = 1e-9) const {
    VectorX<T> nearest(dim());
    for (int i = 0; i < dim(); ++i)
      nearest[i] = std::min(std::max(center[i], lo[i]), hi[i]);
    if ((nearest - center).norm() > cutoff) return 0;
    return amplitude *
           detail::power_cell_integral(dim(), center, alpha, cutoff, lo, hi, rel_tol);
  }
};

template <typename T = double>
PowerBump<T> power_singularity(T amplitude, const VectorX<T>& center, T alpha, T cutoff,
                               T p) {
  const int d = static_cast<int>(center.size());
  if (d < 1 || d > 3) throw ValidationError("unsupported-dimension", "bump center dim");
  if (cutoff <= 0) throw ValidationError("bad-parameter", "cutoff must be > 0");
  if (alpha <= 0) throw ValidationError("bad-parameter", "alpha must be > 0");
  if (alpha * p >= d)
    throw ValidationError("inadmissible-exponent",
                          "alpha * p = " + std::to_string(alpha * p) +
                              " >= d = " + std::to_string(d));
  return PowerBump<T>{center, amplitude, alpha, cutoff};
}

// L^p norm of a single component over an axis box.  The singular radial
// factor integrates in closed form; the angular factor refines adaptively,
// and two successive refinement levels must agree to 1e-4 relative.
template <typename T = double>
T lp_norm(const PowerBump<T>& bump, const VectorX<T>& lo, const VectorX<T>& hi, T p) {
  const int d = bump.dim();
  T q = bump.alpha * p;
  T ap = std::pow(std::abs(bump.amplitude), p);
  if (d == 1) {
    PowerBump<T> abs_p{bump.center, ap, q, bump.cutoff};
    if (q >= 1) throw NumericalError("divergent-norm", "alpha p >= 1 in d = 1");
    return std::pow(abs_p.segment_integral(lo[0], hi[0]), 1 / p);
  }
  T coarse = detail::power_cell_integral(d, bump.center, q, bump.cutoff, lo, hi, T(1e-7));
  T fine = detail::power_cell_integral(d, bump.center, q, bump.cutoff, lo, hi, T(1e-9));
  if (std::abs(fine - coarse) > 1e-4 * std::abs(fine))
    throw NumericalError("divergent-norm", "successive refinements disagree");
  return std::pow(ap * fine, 1 / p);
}

// A potential V = V1 + V2: a bounded part (sup magnitude k1, smooth callable)
// plus finitely many admissible power bumps with L^p magnitude k2.  Bump
// supports must be pairwise disjoint, which keeps the L^p mass an exact
// power sum; overlapping singular supports are rejected at construction.
template <typename T = double>
class Potential {
 public:
  using Field = std::function<T(const VectorX<T>&)>;

  Potential() = default;
  Potential(int d, T p, T k1, Field bounded, std::vector<PowerBump<T>> bumps)
      : dim_(d), p_(p), k1_(k1), bounded_(std::move(bounded)), bumps_(std::move(bumps)) {
    require_dim(d, 1, 3);
    if (p < 1) throw ValidationError("bad-parameter", "p must be >= 1");
    for (const auto& b : bumps_) {
      if (b.dim() != d) throw ValidationError("unsupported-dimension", "bump dim mismatch");
      if (b.alpha * p >= d)
        throw ValidationError("inadmissible-exponent", "bump with alpha * p >= d");
    }
    for (size_t i = 0; i < bumps_.size(); ++i)
      for (size_t j = i + 1; j < bumps_.size(); ++j)
        if ((bumps_[i].center - bumps_[j].center).norm() <
            bumps_[i].cutoff + bumps_[j].cutoff)
          throw ValidationError("overlapping-supports",
                                "singular supports must be pairwise disjoint");
    T acc = 0;
    for (const auto& b : bumps_) acc += std::pow(b.lp_norm_closed(p_), p_);
    k2_ = bumps_.empty() ? T(0) : std::pow(acc, 1 / p_);
  }

  static Potential zero(int d, T p = 2) { return Potential(d, p, 0, nullptr, {}); }

  int dim() const { return dim_; }
  T p() const { return p_; }
  T k1() const { return k1_; }
  T k2() const { return k2_; }
  const std::vector<PowerBump<T>>& bumps() const { return bumps_; }
  bool has_bounded() const { return static_cast<bool>(bounded_); }
  T bounded_part(const VectorX<T>& x) const { return bounded_ ? bounded_(x) : T(0); }

  template <typename Derived>
  T operator()(const Eigen::MatrixBase<Derived>& x) const {
    T acc = bounded_ ? bounded_(VectorX<T>(x)) : T(0);
    for (const auto& b : bumps_) acc += b.eval(x);
    return acc;
  }

  // d = 1: exact average over a grid cell [a, b]; bump part analytic, bounded
  // part by a short Gauss rule.  Keeps the L^1 mass of the singular part.
  T cell_average(T a, T b) const {
    if (dim_ != 1) throw ValidationError("unsupported-dimension", "cell_average is 1D");
    T acc = 0;
    for (const auto& bump : bumps_) acc += bump.segment_integral(a, b);
    if (bounded_) {
      static const T gx[5] = {-0.9061798459386640, -0.5384693101056831, 0,
                              0.5384693101056831, 0.9061798459386640};
      static const T gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                              0.4786286704993665, 0.2369268850561891};
      for (int i = 0; i < 5; ++i) {
        VectorX<T> x(1);
        x[0] = (a + b) / 2 + (b - a) / 2 * gx[i];
        acc += (b - a) / 2 * gw[i] * bounded_(x);
      }
    }
    return acc / (b - a);
  }

  // Average of V over an axis-aligned cell in d >= 2; the bump part uses the
  // radial closed form, so singular and cutoff cells stay exact.
  T cell_average_box(const VectorX<T>& lo, const VectorX<T>& hi, T rel_tol = 1e-8) const {
    T vol = 1;
    for (int i = 0; i < dim_; ++i) vol *= hi[i] - lo[i];
    T acc = 0;
    if (bounded_) acc += detail::gauss2_cell(dim_, bounded_, lo, hi);
    for (const auto& bump : bumps_) acc += bump.box_integral(lo, hi, rel_tol);
    return acc / vol;
  }

 private:
  int dim_ = 1;
  T p_ = 2;
  T k1_ = 0;
  Field bounded_;
  std::vector<PowerBump<T>> bumps_;
  T k2_ = 0;
};

// d = 1: K = sup over window centers x of int_{x-1}^{x+1} |V|, scanned over a
// regular grid of centers covering [lo, hi].
template <typename T = double>
T unit_window_l1_sup(const Potential<T>& V, T lo, T hi, T step = T(0.05)) {
  if (V.dim() != 1) throw ValidationError("unsupported-dimension", "1D only");
  auto window_mass = [&](T x) {
    // Bump supports are disjoint, so the singular mass is an exact sum of
    // segment-integral magnitudes; the bounded remainder integrates by a
    // fine midpoint rule.  The sum is an upper bound for int |V1 + V2|,
    // which is the safe direction everywhere K is consumed.
    T acc = 0;
    for (const auto& b : V.bumps()) acc += std::abs(b.segment_integral(x - 1, x + 1));
    if (V.has_bounded()) {
      const int n = 400;
      T h = T(2) / n;
      for (int i = 0; i < n; ++i) {
        VectorX<T> t(1);
        t[0] = x - 1 + (i + T(0.5)) * h;
        T v = V(t);
        for (const auto& b : V.bumps()) v -= b.eval(t);
        acc += h * std::abs(v);
      }
    }
    return acc;
  };
  T best = 0;
  for (T x = lo; x <= hi + step / 2; x += step) best = std::max(best, window_mass(x));
  return best;
}

// Seeded random singular potential: bumps with pairwise disjoint supports,
// uniformly placed in an axis box, admissible exponents for the given (d, p).
// Identical seeds reproduce the potential bitwise.
template <typename T = double>
Potential<T> random_singular(unsigned long long seed, int d, T p, const VectorX<T>& lo,
                             const VectorX<T>& hi, T density, T amp_lo, T amp_hi) {
  require_dim(d, 1, 3);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<T> unit(0, 1);
  T vol = 1;
  for (int i = 0; i < d; ++i) vol *= hi[i] - lo[i];
  int count = std::max(1, static_cast<int>(std::lround(density * vol)));
  std::vector<PowerBump<T>> bumps;
  for (int k = 0; k < count; ++k) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      VectorX<T> c(d);
      for (int i = 0; i < d; ++i) c[i] = lo[i] + (hi[i] - lo[i]) * unit(gen);
      T s = T(0.15) + T(0.2) * unit(gen);
      T alpha = (T(0.25) + T(0.55) * unit(gen)) * T(d) / p;
      T amp = amp_lo + (amp_hi - amp_lo) * unit(gen);
      if (unit(gen) < T(0.25)) amp = -amp;
      bool ok = true;
      for (const auto& b : bumps)
        if ((b.center - c).norm() < b.cutoff + s + T(0.02)) { ok = false; break; }
      if (!ok) continue;
      bumps.push_back(PowerBump<T>{c, amp, alpha, s});
      break;
    }
  }
  return Potential<T>(d, p, 0, nullptr, std::move(bumps));
}

}  // namespace doslab
