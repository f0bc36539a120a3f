#include <cmath>
#include <numbers>

#include "aflab/error.hpp"
#include "aflab/torus_field.hpp"
#include "doctest.h"

using namespace aflab;

namespace {

Field constant_field(const TorusGrid& g, std::vector<double> w) {
  Field u(g, static_cast<int>(w.size()));
  u.shift(w);
  return u;
}

}  // namespace

TEST_CASE("grid indexing round trips and wraps") {
  const TorusGrid g(3, 6);
  CHECK(g.cell_count() == 216);
  for (std::size_t c = 0; c < g.cell_count(); c += 7) CHECK(g.ravel(g.unravel(c)) == c);
  const auto idx = g.unravel(g.shifted(g.ravel({5, 0, 2}), 0, 1));
  CHECK(idx[0] == 0);
  CHECK(idx[1] == 0);
  CHECK(idx[2] == 2);
  CHECK(g.frequency(3) == 3);
  CHECK(g.frequency(4) == -2);
  CHECK_THROWS_AS(TorusGrid(2, 5), LabError);
  CHECK_THROWS_AS(TorusGrid(4, 8), LabError);
}

TEST_CASE("integrate") {
  const TorusGrid g2(2, 8);
  CHECK(integrate(constant_field(g2, {2.0}), 2.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(integrate(Field(g2, 3), 1.5) == 0.0);
  CHECK(integrate(Field(g2, 3), 2.0, [](std::size_t c) { return c % 2 == 0; }) == 0.0);

  const TorusGrid g1(1, 64);
  const Field s = sample_field(g1, 1, [](std::span<const double> x, std::span<double> out) {
    out[0] = std::sin(2.0 * std::numbers::pi * x[0]);
  });
  CHECK(std::abs(integrate(s, 2.0) - 0.5) <= 1e-12);
}

TEST_CASE("superlevel statistics") {
  const TorusGrid g(2, 8);
  const Field one = constant_field(g, {1.0});
  const auto empty = superlevel_stats(one, 2.0, 2.0);
  CHECK(empty.measure == 0.0);
  CHECK(empty.integral_u == 0.0);
  CHECK(empty.integral_up == 0.0);
  const auto full = superlevel_stats(one, 0.5, 2.0);
  CHECK(full.measure == 1.0);
  CHECK(full.integral_u == doctest::Approx(1.0).epsilon(1e-15));

  // 3 on exactly a quarter of the cells.
  Field bump(g, 1);
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    if (g.unravel(c)[0] < 2) bump(c, 0) = 3.0;
  const auto s = superlevel_stats(bump, 1.0, 2.0);
  CHECK(s.measure == 0.25);
  CHECK(s.integral_u == 0.75);
  CHECK(s.integral_up == 2.25);
  CHECK_THROWS_AS(superlevel_stats(bump, 0.0, 2.0), LabError);
}

TEST_CASE("shell statistics") {
  const TorusGrid g(2, 8);
  const auto zero = shell_stats(constant_field(g, {1.0}), 2.0, 4.0, 1.0);
  CHECK(zero.measure == 0.0);
  CHECK(zero.integral_up == 0.0);
  CHECK(shell_stats(constant_field(g, {3.0}), 2.0, 4.0, 1.0).measure == 1.0);

  Field two(g, 1);
  for (std::size_t c = 0; c < g.cell_count(); ++c) two(c, 0) = c % 2 ? 5.0 : 1.0;
  const auto s = shell_stats(two, 2.0, 8.0, 1.0);
  CHECK(s.measure == 0.5);
  CHECK(s.integral_u == 2.5);

  CHECK_THROWS_AS(shell_stats(two, 3.0, 3.0, 1.0), LabError);
  CHECK_THROWS_AS(shell_stats(two, 0.0, 3.0, 1.0), LabError);
}

TEST_CASE("magnitude is the Euclidean channel norm") {
  const TorusGrid g(1, 4);
  const Field u = constant_field(g, {3.0, -4.0});
  CHECK(u.magnitude(2) == 5.0);
  CHECK(u.max_magnitude() == 5.0);
  CHECK(superlevel_stats(u, 5.0, 1.0).measure == 1.0);
}

TEST_CASE("level-set properties on an irregular field") {
  const TorusGrid g(2, 16);
  const Field u = sample_field(g, 2, [](std::span<const double> x, std::span<double> out) {
    out[0] = 3.0 * std::sin(2.0 * std::numbers::pi * x[0]) + x[1];
    out[1] = std::exp(2.0 * x[0] * x[1]);
  });
  const double p = 2.5;
  const double total = integrate(u, p);

  // Shells partition exactly; the split point is where cells change owner, so sums agree.
  const auto a = shell_stats(u, 0.5, 1.7, p);
  const auto b = shell_stats(u, 1.7, 6.0, p);
  const auto ab = shell_stats(u, 0.5, 6.0, p);
  CHECK(a.measure + b.measure == doctest::Approx(ab.measure).epsilon(1e-15));
  CHECK(a.integral_up + b.integral_up == doctest::Approx(ab.integral_up).epsilon(1e-13));

  double prev_measure = 2.0, prev_up = kInfinity;
  for (double lambda = 0.1; lambda < 5.0; lambda *= 1.3) {
    const auto s = superlevel_stats(u, lambda, p);
    CHECK(s.measure <= prev_measure);
    CHECK(s.integral_up <= prev_up);
    CHECK(s.measure <= total / std::pow(lambda, p) * (1.0 + 1e-12));  // Chebyshev
    prev_measure = s.measure;
    prev_up = s.integral_up;
  }
}

TEST_CASE("trigonometric polynomials integrate to their zero mode") {
  const TorusGrid g(2, 16);
  const Field u = sample_field(g, 1, [](std::span<const double> x, std::span<double> out) {
    const double t = 2.0 * std::numbers::pi;
    out[0] = 0.7 + std::cos(t * 3 * x[0]) * std::sin(t * 5 * x[1]) + std::cos(t * 7 * x[1]);
  });
  double s = 0.0;
  for (double v : u.values()) s += v;
  CHECK(std::abs(s / g.cell_count() - 0.7) <= 1e-14);
}

TEST_CASE("field arithmetic checks shapes") {
  const Field a(TorusGrid(2, 4), 2);
  const Field b(TorusGrid(2, 6), 2);
  CHECK_THROWS_AS(max_abs_difference(a, b), LabError);
  Field c = a;
  const std::vector<double> w{1.0, 2.0};
  c.shift(w);
  CHECK(max_abs_difference(2.0 * c, c + c) == 0.0);
  CHECK(c.mean()[1] == 2.0);
}
