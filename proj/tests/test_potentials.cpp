#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "doslab/potentials.hpp"
#include "test_util.hpp"

using namespace doslab;

namespace {
VectorX<double> vec(std::initializer_list<double> v) {
  VectorX<double> x(static_cast<int>(v.size()));
  int i = 0;
  for (double t : v) x[i++] = t;
  return x;
}
}  // namespace

TEST_CASE("admissibility gate alpha p < d") {
  CHECK_NOTHROW(power_singularity(1.0, vec({0, 0}), 0.5, 1.0, 3.0));
  CHECK_THROWS_AS(power_singularity(1.0, vec({0, 0}), 0.5, 1.0, 4.0), ValidationError);
  CHECK_THROWS_AS(power_singularity(1.0, vec({0}), 1.2, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(power_singularity(1.0, vec({0, 0}), -0.5, 1.0, 2.0), ValidationError);
}

TEST_CASE("closed-form L^p norm of a single bump") {
  // d = 2, alpha = 1/2, s = 1, a = 1, p = 3: norm = (4 pi)^{1/3}
  auto b = power_singularity(1.0, vec({0, 0}), 0.5, 1.0, 3.0);
  CHECK(b.lp_norm_closed(3.0) == doctest::Approx(std::cbrt(4 * kPi)).epsilon(1e-12));
  // d = 3 check against the radial integral 4 pi s^{3-ap}/(3-ap)
  auto b3 = power_singularity(2.0, vec({1, 0, -1}), 0.4, 0.7, 4.0);
  double q = 3 - 0.4 * 4;
  double expect = 2.0 * std::pow(4 * kPi * std::pow(0.7, q) / q, 0.25);
  CHECK(b3.lp_norm_closed(4.0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("adaptive lp_norm agrees with the analytic radial value") {
  auto b = power_singularity(1.0, vec({0.1, -0.2}), 0.5, 1.0, 3.0);
  double norm = lp_norm(b, vec({-1.5, -1.5}), vec({1.5, 1.5}), 3.0);
  CHECK(norm == doctest::Approx(std::cbrt(4 * kPi)).epsilon(1e-6));
  // inadmissible exponent must be flagged as divergent or rejected
  PowerBump<double> bad{vec({0, 0}), 1.0, 1.2, 1.0};  // alpha p = 2.4 >= d = 2
  CHECK_THROWS_AS(lp_norm(bad, vec({-1.5, -1.5}), vec({1.5, 1.5}), 2.0), Error);
}

TEST_CASE("1D segment integrals and the unit-window sup") {
  // V(x) = |x|^{-1/2} chi_{|x|<=1}: window at 0 carries mass 4
  auto b = power_singularity(1.0, vec({0}), 0.5, 1.0, 1.0);
  CHECK(b.segment_integral(-1, 1) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(b.segment_integral(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b.segment_integral(0.25, 1) == doctest::Approx(2.0 - 1.0).epsilon(1e-12));
  CHECK(b.segment_integral(-2, -1.5) == 0.0);
  Potential<double> V(1, 1.0, 0, nullptr, {b});
  CHECK(unit_window_l1_sup(V, -2.0, 2.0) == doctest::Approx(4.0).epsilon(1e-9));
  // window centered away from the bump sees less mass
  CHECK(unit_window_l1_sup(V, 1.5, 2.0) < 2.0);
}

TEST_CASE("1D cell averages preserve singular mass") {
  auto b = power_singularity(1.0, vec({0.5}), 0.5, 0.4, 1.0);
  Potential<double> V(1, 1.0, 1.0, [](const VectorX<double>& x) { return std::cos(x[0]); },
                      {b});
  // sum of cell averages times h telescopes to the total integral
  double h = 0.01, total = 0;
  for (int i = 0; i < 100; ++i) total += h * V.cell_average(i * h, (i + 1) * h);
  double expect = b.segment_integral(0, 1) + std::sin(1.0);
  CHECK(total == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("potential evaluation sums bounded part and bumps") {
  auto b1 = power_singularity(1.0, vec({0.5, 0.0}), 0.4, 0.3, 4.0);
  auto b2 = power_singularity(-0.5, vec({-0.6, 0.1}), 0.3, 0.25, 4.0);
  Potential<double> V(2, 4.0, 2.0, [](const VectorX<double>& x) { return x[0]; }, {b1, b2});
  Vector2<double> x(0.5, 0.2);
  CHECK(V(x) == doctest::Approx(0.5 + 1.0 * std::pow(0.2, -0.4)));
  Vector2<double> far(2.0, 2.0);
  CHECK(V(far) == doctest::Approx(2.0));
  CHECK(V.k2() > 0);
}

TEST_CASE("multi-bump norm never exceeds the sum of individual norms") {
  auto g = testutil::rng(911);
  VectorX<double> lo = vec({0, 0}), hi = vec({6, 6});
  Potential<double> V = random_singular(911ULL, 2, 4.0, lo, hi, 10.0 / 36.0, 0.5, 2.0);
  CHECK(V.bumps().size() >= 8);
  double sum = 0;
  for (const auto& b : V.bumps()) sum += b.lp_norm_closed(4.0);
  CHECK(V.k2() <= sum + 1e-12);
  CHECK(V.k2() > 0);
}

TEST_CASE("random potentials are bitwise reproducible per seed") {
  VectorX<double> lo = vec({0, 0, 0}), hi = vec({4, 4, 4});
  Potential<double> a = random_singular(7ULL, 3, 12.0, lo, hi, 0.1, 0.5, 1.5);
  Potential<double> b = random_singular(7ULL, 3, 12.0, lo, hi, 0.1, 0.5, 1.5);
  Potential<double> c = random_singular(8ULL, 3, 12.0, lo, hi, 0.1, 0.5, 1.5);
  REQUIRE(a.bumps().size() == b.bumps().size());
  for (size_t i = 0; i < a.bumps().size(); ++i) {
    CHECK(a.bumps()[i].center == b.bumps()[i].center);
    CHECK(a.bumps()[i].amplitude == b.bumps()[i].amplitude);
    CHECK(a.bumps()[i].alpha == b.bumps()[i].alpha);
    CHECK(a.bumps()[i].cutoff == b.bumps()[i].cutoff);
  }
  bool same = a.bumps().size() == c.bumps().size();
  if (same)
    for (size_t i = 0; i < a.bumps().size(); ++i)
      same = same && a.bumps()[i].center == c.bumps()[i].center;
  CHECK_FALSE(same);
  // every generated exponent admissible
  for (const auto& bump : a.bumps()) CHECK(bump.alpha * 12.0 < 3.0);
}

TEST_CASE("box cell averages match a radial oracle near the singularity") {
  // Oracle: polar integration around the bump center; the radial part of
  // |x - c|^{-alpha} integrates in closed form up to the cell boundary.
  auto b = power_singularity(1.0, vec({0.503, 0.501}), 0.5, 2.0, 3.0);
  Potential<double> V(2, 3.0, 0, nullptr, {b});
  VectorX<double> lo = vec({0.45, 0.45}), hi = vec({0.55, 0.55});
  double got = V.cell_average_box(lo, hi, 1e-9);
  const int nth = 40000;
  double acc = 0;
  for (int i = 0; i < nth; ++i) {
    double th = 2 * kPi * (i + 0.5) / nth;
    double cth = std::cos(th), sth = std::sin(th);
    // distance from center to the cell boundary along direction th
    double tmax = std::numeric_limits<double>::infinity();
    if (cth > 0) tmax = std::min(tmax, (hi[0] - b.center[0]) / cth);
    if (cth < 0) tmax = std::min(tmax, (lo[0] - b.center[0]) / cth);
    if (sth > 0) tmax = std::min(tmax, (hi[1] - b.center[1]) / sth);
    if (sth < 0) tmax = std::min(tmax, (lo[1] - b.center[1]) / sth);
    acc += std::pow(tmax, 1.5) / 1.5 * (2 * kPi / nth);
  }
  double vol = (hi[0] - lo[0]) * (hi[1] - lo[1]);
  CHECK(got == doctest::Approx(acc / vol).epsilon(1e-6));
}
