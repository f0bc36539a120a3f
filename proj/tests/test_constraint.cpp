#include <cmath>
#include <numbers>
#include <random>

#include "aflab/constraint.hpp"
#include "aflab/error.hpp"
#include "doctest.h"

using namespace aflab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double l2(const Field& u) { return std::sqrt(inner_product(u, u)); }

Field random_field(const TorusGrid& g, int channels, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Field u(g, channels);
  for (double& v : u.values()) v = d(rng);
  return u;
}

// Band-limited field with channel-dependent modes.
Field trig_field(const TorusGrid& g, int channels, double phase) {
  return sample_field(g, channels, [&](std::span<const double> x, std::span<double> out) {
    for (int k = 0; k < channels; ++k)
      out[k] = std::sin(kTwoPi * ((k + 1) * x[0] + 2 * x[1]) + phase * k) +
               0.5 * std::cos(kTwoPi * (3 * x[1] - k * x[0]) + phase);
  });
}

}  // namespace

TEST_CASE("derivative multipliers") {
  const int N = 16;
  for (int xi : {-7, -1, 0, 3, 8}) {
    const double t = kTwoPi * xi / N;
    const Complex fd = derivative_multiplier(Scheme::forward_difference, xi, N);
    CHECK(std::abs(fd - Complex(N * (std::cos(t) - 1.0), N * std::sin(t))) <= 1e-12);
    const Complex cd = derivative_multiplier(Scheme::central_difference, xi, N);
    CHECK(std::abs(cd - Complex(0.0, N * std::sin(t))) <= 1e-12);
    const Complex sp = derivative_multiplier(Scheme::spectral, xi, N);
    CHECK(std::abs(sp - Complex(0.0, kTwoPi * xi)) <= 1e-12);
  }
  CHECK(scheme_from_string("forward") == Scheme::forward_difference);
  CHECK_THROWS_AS(scheme_from_string("upwind"), LabError);
}

TEST_CASE("apply annihilates constants and potentials") {
  const TorusGrid g(2, 16);
  Field c(g, 2);
  const std::vector<double> w{0.3, -1.2};
  c.shift(w);
  CHECK(max_abs_difference(apply(divergence(2), c), Field(g, 1)) == 0.0);

  // u = (-d2 psi, d1 psi), psi = sin(2 pi x1) sin(2 pi x2).
  const Field rot = sample_field(g, 2, [](std::span<const double> x, std::span<double> out) {
    out[0] = -kTwoPi * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
    out[1] = kTwoPi * std::cos(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]);
  });
  CHECK(l2(apply(divergence(2), rot)) <= 1e-10);

  // u = grad cos(2 pi x2).
  const Field grad = sample_field(g, 2, [](std::span<const double> x, std::span<double> out) {
    out[0] = 0.0;
    out[1] = -kTwoPi * std::sin(kTwoPi * x[1]);
  });
  CHECK(l2(apply(curl(2), grad)) <= 1e-10);
}

TEST_CASE("residual norm of a non-solenoidal field") {
  const TorusGrid g(2, 16);
  const Field u = sample_field(g, 2, [](std::span<const double> x, std::span<double> out) {
    out[0] = std::sin(kTwoPi * x[0]);
    out[1] = 0.0;
  });
  // ||2 pi cos|| / ||sin|| = 2 pi.
  CHECK(residual_norm(divergence(2), u) == doctest::Approx(kTwoPi).epsilon(1e-9));
  Field k(g, 2);
  const std::vector<double> w{2.0, 5.0};
  k.shift(w);
  CHECK(residual_norm(divergence(2), k) == 0.0);
}

TEST_CASE("forward-difference scheme matches hand-written differences") {
  const TorusGrid g(2, 8);
  const Field u = random_field(g, 2, 4);
  const Field div = apply(divergence(2).with_scheme(Scheme::forward_difference), u);
  const int N = g.resolution();
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const double expect = N * (u(g.shifted(c, 0, 1), 0) - u(c, 0)) +
                          N * (u(g.shifted(c, 1, 1), 1) - u(c, 1));
    CHECK(std::abs(div(c, 0) - expect) <= 1e-11);
  }
}

TEST_CASE("kernel projection") {
  const TorusGrid g(2, 16);
  const auto div = divergence(2);

  const Field solenoidal = random_test_field(div, g, 9, 5);
  CHECK(max_abs_difference(project_kernel(div, solenoidal), solenoidal) <= 1e-12);

  const Field u = random_field(g, 2, 1);
  const Field once = project_kernel(div, u);
  CHECK(max_abs_difference(project_kernel(div, once), once) <= 1e-12);
  CHECK(residual_norm(div, once) <= 1e-10);
  for (int k = 0; k < 2; ++k) CHECK(std::abs(once.mean()[k] - u.mean()[k]) <= 1e-14);

  // Zero-mean gradients are orthogonal to the div-free space.
  const Field grad = sample_field(g, 2, [](std::span<const double> x, std::span<double> out) {
    out[0] = kTwoPi * std::cos(kTwoPi * x[0]) * std::cos(kTwoPi * 2 * x[1]);
    out[1] = -2.0 * kTwoPi * std::sin(kTwoPi * x[0]) * std::sin(kTwoPi * 2 * x[1]);
  });
  CHECK(project_kernel(div, grad).max_magnitude() <= 1e-10);

  const KernelProjector proj(divergence(2, 2), g);
  CHECK(proj.max_rank() == 2);
  CHECK_THROWS_AS(proj.project(u), LabError);
}

TEST_CASE("random test fields") {
  const TorusGrid g(2, 16);
  for (const auto& op : {divergence(2), curl(2), curl(2, 2), plap_coupled()}) {
    const Field u = random_test_field(op, g, 3, 4);
    CHECK(residual_norm(op, u) <= 1e-10);
    for (double m : u.mean()) CHECK(std::abs(m) <= 1e-12);
  }
  CHECK(random_test_field(divergence(2), g, 3, 0).max_magnitude() == 0.0);
  const Field a = random_test_field(divergence(2), g, 1, 3);
  const Field b = random_test_field(divergence(2), g, 2, 3);
  CHECK(l2(a - b) > 0.1);

  // Same trigonometric polynomial on every grid.
  const Field coarse = random_test_field(curl(2), TorusGrid(2, 16), 5, 3);
  const Field fine = random_test_field(curl(2), TorusGrid(2, 32), 5, 3);
  double worst = 0.0;
  for (std::size_t c = 0; c < coarse.cell_count(); ++c) {
    const auto idx = coarse.grid().unravel(c);
    const std::size_t f = fine.grid().ravel({2 * idx[0], 2 * idx[1], 0});
    for (int k = 0; k < 2; ++k) worst = std::max(worst, std::abs(coarse(c, k) - fine(f, k)));
  }
  CHECK(worst <= 1e-12);
  CHECK_THROWS_AS(random_test_field(divergence(2), g, 1, 8), LabError);
}

TEST_CASE("symbol homogeneity and adjoint") {
  const DifferentialOperator op = curl(3);
  const Frequency xi{1, -2, 3};
  for (int t : {2, -3}) {
    const Frequency txi{t * xi[0], t * xi[1], t * xi[2]};
    CHECK((op.symbol(txi) - static_cast<double>(t) * op.symbol(xi)).norm() <= 1e-10);
  }

  const TorusGrid g(2, 16);
  for (const auto& A : {divergence(2), curl(2, 2), plap_coupled()}) {
    const Field u = trig_field(g, A.source_dim(), 1.0);
    const Field phi = trig_field(g, A.target_dim(), 2.0);
    const double lhs = inner_product(apply(A, u), phi);
    const double rhs = inner_product(u, apply(A.adjoint(), phi));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("quasiaffine forms") {
  const TorusGrid g(2, 32);
  const std::vector<double> id{1.0, 0.0, 0.0, 1.0};
  const QuasiaffineForm det = normalized_determinant(2);
  CHECK(det.scale == doctest::Approx(2.0));
  CHECK(det.normalization_ok);
  CHECK(det(id) == doctest::Approx(2.0));
  CHECK(homogeneity_defect(det, 200, 3) <= 1e-10);

  const auto r = check_quasiaffine(det, curl(2, 2), id, 20, g, 4);
  CHECK(r.pass);
  CHECK(r.max_deviation <= 1e-8);

  const auto lin = check_quasiaffine(linear_form(2, 0), divergence(2), std::vector<double>{1.0, 2.0},
                                     10, g, 4);
  CHECK(lin.max_deviation <= 1e-12);

  const auto sq = check_quasiaffine(squared_norm(2), divergence(2), std::vector<double>{1.0, 0.0},
                                    5, g, 4);
  CHECK_FALSE(sq.pass);
  CHECK(sq.max_deviation > 1e-3);

  CHECK_THROWS_AS(check_quasiaffine(det, curl(2, 2), id, 1, TorusGrid(2, 16), 4), LabError);
}

TEST_CASE("operator construction errors") {
  CHECK_THROWS_AS(builtin_operator("grad7"), LabError);
  CHECK_THROWS_AS(apply(divergence(3), Field(TorusGrid(2, 8), 2)), LabError);
  CHECK(builtin_operator("curl2x2").source_dim() == 4);
  CHECK(builtin_operator("plap-coupled").target_dim() == 2);
}
