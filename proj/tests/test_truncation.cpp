#include <cmath>
#include <numbers>
#include <random>

#include "aflab/error.hpp"
#include "aflab/pipeline.hpp"
#include "aflab/truncation.hpp"
#include "doctest.h"

using namespace aflab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Field scalar(const TorusGrid& g, double (*f)(double, double)) {
  return sample_field(g, 1, [f](std::span<const double> x, std::span<double> out) {
    out[0] = f(x[0], x[1]);
  });
}

double sin_sin(double x, double y) { return std::sin(kTwoPi * x) * std::sin(kTwoPi * y); }
double sin_x(double x, double) { return std::sin(kTwoPi * x); }

}  // namespace

TEST_CASE("potential recovery with the spectral scheme") {
  const TorusGrid g(2, 16);
  PotentialOptions opt;
  opt.scheme = Scheme::spectral;

  const Field grad = sample_field(g, 2, [](std::span<const double> x, std::span<double> out) {
    out[0] = kTwoPi * std::cos(kTwoPi * x[0]);
    out[1] = 0.0;
  });
  const auto r = recover_potential(grad, PotentialKind::gradient, opt);
  CHECK(max_abs_difference(r.potential, scalar(g, sin_x)) <= 1e-10);

  // u = (-d2 psi, d1 psi)
  const Field rot = sample_field(g, 2, [](std::span<const double> x, std::span<double> out) {
    out[0] = -kTwoPi * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
    out[1] = kTwoPi * std::cos(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]);
  });
  const auto s = recover_potential(rot, PotentialKind::stream2d, opt);
  CHECK(max_abs_difference(s.potential, scalar(g, sin_sin)) <= 1e-10);

  CHECK(recover_potential(Field(g, 2), PotentialKind::gradient, opt).potential.max_magnitude() == 0.0);
  CHECK_THROWS_AS(recover_potential(rot, PotentialKind::gradient, opt), LabError);
}

TEST_CASE("mean handling and forward-difference round trip") {
  const TorusGrid g(2, 8);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Field v(g, 1);
  for (double& x : v.values()) x = d(rng);
  const double vbar = v.mean()[0];

  Field u = potential_to_field(v, PotentialKind::gradient);
  PotentialOptions fd;
  fd.scheme = Scheme::forward_difference;
  const auto back = recover_potential(u, PotentialKind::gradient, fd);
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    CHECK(std::abs(back.potential(c, 0) - (v(c, 0) - vbar)) <= 1e-12);

  const std::vector<double> m{0.5, -2.0};
  u.shift(m);
  CHECK_THROWS_AS(recover_potential(u, PotentialKind::gradient, fd), LabError);
  fd.allow_mean = true;
  const auto with_mean = recover_potential(u, PotentialKind::gradient, fd);
  CHECK(with_mean.mean[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(with_mean.mean[1] == doctest::Approx(-2.0).epsilon(1e-13));
}

TEST_CASE("truncation is the identity above the maximal function") {
  const Field u = concentrating_gradient_field(32, 0.1);
  const MaximalField mu = maximal(u);
  const auto r = lipschitz_truncate(u, mu, 1.01 * mu.max(), PotentialKind::gradient);
  CHECK(max_abs_difference(r.truncated, u) <= 1e-12);
  CHECK(r.bad_cells == 0);
  CHECK_FALSE(r.trivial);

  const auto z = lipschitz_truncate(Field(TorusGrid(2, 8), 2), 1.0, PotentialKind::gradient);
  CHECK(z.truncated.max_magnitude() == 0.0);
  CHECK(z.bad_cells == 0);

  CHECK_THROWS_AS(lipschitz_truncate(u, 0.0, PotentialKind::gradient), LabError);
  CHECK(default_lipschitz_factor(2) == 8.0);
  CHECK(default_lipschitz_factor(3) == 24.0);
}

TEST_CASE("single mode cut between min and max of Mu") {
  const TorusGrid g(2, 32);
  const double a = 3.0;
  // (a cos 2 pi x1, 0) is curl-free in every scheme.
  const Field u = sample_field(g, 2, [a](std::span<const double> x, std::span<double> out) {
    out[0] = a * std::cos(kTwoPi * x[0]);
    out[1] = 0.0;
  });
  // Mu >= 2a/pi everywhere, so a lower cut would leave G empty.
  const double lambda = 0.8 * a;
  const auto r = lipschitz_truncate(u, lambda, PotentialKind::gradient);
  REQUIRE_FALSE(r.trivial);
  CHECK(r.bad_cells > 0);
  CHECK(r.inclusion_violations == 0);
  CHECK(r.linf_ratio <= default_lipschitz_factor(2) * std::sqrt(2.0) * (1.0 + 1e-12));
  CHECK(r.truncated.max_magnitude() <= r.linf_bound * (1.0 + 1e-12));
  CHECK(r.residual <= 1e-10);
  CHECK(r.measured_lipschitz > 0.0);

  // Every changed cell lies within one cell of {Mu >= lambda}: the forward stencil reaches that far.
  const auto big = dilate(g, maximal_superlevel(maximal(u), lambda));
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    if (std::abs(r.truncated(c, 0) - u(c, 0)) > 1e-12) CHECK(big[c]);

  const auto s = lipschitz_truncate(u, lambda, PotentialKind::gradient,
                                    TruncationOptions{.tight_lipschitz = false});
  CHECK(s.inclusion_violations == 0);
  CHECK(s.residual <= 1e-10);
}

TEST_CASE("naive cut versus Lipschitz truncation") {
  const auto op = kernel_operator(PotentialKind::gradient, 2, 2, Scheme::forward_difference);
  Field bounded(TorusGrid(2, 8), 2);
  const std::vector<double> w{0.2, 0.1};
  bounded.shift(w);
  const auto id = naive_cut_project(bounded, op, 1.0);
  CHECK(max_abs_difference(id.truncated, bounded) <= 1e-14);

  const Field peak = sharp_peak_gradient_field(64);
  const double lambda = 0.2 * peak.max_magnitude();
  const auto naive = naive_cut_project(peak, op, lambda);
  const auto lip = lipschitz_truncate(peak, lambda, PotentialKind::gradient);
  CHECK(naive.linf_ratio > lip.linf_ratio);
  CHECK(lip.inclusion_violations == 0);
  CHECK(naive.residual <= 1e-10);
}

TEST_CASE("verify_tp rows") {
  const Field u = concentrating_gradient_field(32, 0.05);
  const MaximalField mu = maximal(u);
  const auto lambdas = upper_level_grid(mu.values, 6);
  REQUIRE(lambdas.size() == 6);
  for (std::size_t i = 1; i < lambdas.size(); ++i) CHECK(lambdas[i] > lambdas[i - 1]);
  const auto rep = verify_tp(u, lambdas, PotentialKind::gradient);
  CHECK(rep.pass);
  CHECK(rep.budget == doctest::Approx(8.0 * std::sqrt(2.0)));
  CHECK(rep.linf_spread >= 1.0);
  for (const auto& row : rep.rows) {
    CHECK(row.inclusion_violations == 0);
    CHECK(row.within_budget);
    CHECK(row.residual <= 1e-10);
  }

  const std::vector<double> above{2.0 * mu.max()};
  const auto same = verify_tp(u, above, PotentialKind::gradient);
  CHECK(same.rows[0].bad_cells == 0);
  CHECK(same.linf_spread == 1.0);
}

TEST_CASE("dilation wraps periodically") {
  const TorusGrid g(2, 8);
  std::vector<bool> mask(g.cell_count(), false);
  mask[g.ravel({0, 0, 0})] = true;
  const auto d = dilate(g, mask);
  std::size_t n = 0;
  for (bool b : d) n += b;
  CHECK(n == 9);
  CHECK(d[g.ravel({7, 7, 0})]);
  CHECK(d[g.ravel({1, 7, 0})]);
  CHECK_FALSE(d[g.ravel({2, 0, 0})]);
}
