#include <cmath>
#include <vector>

#include "aflab/error.hpp"
#include "aflab/extension.hpp"
#include "doctest.h"

using namespace aflab;

namespace {

// Mirror image of torus cell t in the lower cube, with the sign of component k.
double mirrored(const Field& cube, const TorusGrid& torus, std::size_t t, int k) {
  const int Nh = cube.grid().resolution();
  auto idx = torus.unravel(t);
  double sign = 1.0;
  for (int j = 0; j < torus.dim(); ++j)
    if (idx[j] >= Nh) {
      idx[j] = 2 * Nh - 1 - idx[j];
      if (j != k) sign = -sign;
    }
  return sign * cube(cube.grid().ravel(idx), k);
}

}  // namespace

TEST_CASE("reflection of a constant field") {
  const TorusGrid g(2, 4);
  Field c(g, 2);
  const std::vector<double> w{0.0, 1.0};
  c.shift(w);
  const Field e = reflect_extend_divfree(c);
  REQUIRE(e.grid().resolution() == 8);
  for (std::size_t t = 0; t < e.cell_count(); ++t) {
    const auto idx = e.grid().unravel(t);
    CHECK(e(t, 0) == 0.0);
    // The second component flips across the first axis only.
    CHECK(e(t, 1) == (idx[0] < 4 ? 1.0 : -1.0));
  }
  CHECK(torus_divergence_residual(e) == 0.0);
  CHECK(reflect_extend_divfree(Field(g, 2)).max_magnitude() == 0.0);
}

TEST_CASE("reflection of random divergence-free cube fields") {
  for (int n : {2, 3}) {
    const int Nh = n == 2 ? 8 : 4;
    const Field cube = random_divfree_cube_field(n, Nh, 7, 2);
    CHECK(cube_divergence_residual(cube) <= 1e-12);
    CHECK(cube.max_magnitude() > 0.1);
    const Field e = reflect_extend_divfree(cube);
    CHECK(torus_divergence_residual(e) <= 1e-8);
    CHECK(max_abs_difference(restrict_to_cube(e), cube) == 0.0);
    double worst = 0.0;
    for (std::size_t t = 0; t < e.cell_count(); ++t)
      for (int k = 0; k < n; ++k)
        worst = std::max(worst, std::abs(e(t, k) - mirrored(cube, e.grid(), t, k)));
    CHECK(worst == 0.0);

    const Field z = zero_extend(cube);
    CHECK(max_abs_difference(restrict_to_cube(z), cube) == 0.0);
    CHECK(integrate(z, 2.0) == doctest::Approx(integrate(cube, 2.0) / (1 << n)).epsilon(1e-13));

    const auto rep = verify_pointwise_maximal_bound(cube, e);
    CHECK(rep.pointwise_bound_ok);
    CHECK(rep.pointwise_max_ratio <= 1.0);
  }
  Field bad(TorusGrid(2, 8), 2);
  bad(0, 0) = 1.0;
  CHECK_THROWS_AS(reflect_extend_divfree(bad), LabError);
}

TEST_CASE("cube mask geometry") {
  const TorusGrid g(2, 16);
  const DomainMask m = cube_mask(g);
  CHECK(m.inside_count() == 64);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto idx = g.unravel(c);
    const bool in = idx[0] < 8 && idx[1] < 8;
    CHECK(m.inside[c] == in);
    if (!in) continue;
    // Nearest outside cell is straight along an axis.
    const int steps = std::min({idx[0] + 1, 8 - idx[0], idx[1] + 1, 8 - idx[1]});
    CHECK(m.boundary_dist[c] == doctest::Approx((steps - 1) / 16.0).epsilon(1e-14));
  }
  const auto shell = shell_set(m, 0.125, 1.5);
  std::size_t count = 0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!shell[c]) continue;
    ++count;
    CHECK(m.inside[c]);
    CHECK(m.boundary_dist[c] >= 0.125 / 1.5 - 1e-12);
    CHECK(m.boundary_dist[c] <= 0.125 * 1.5 + 1e-12);
  }
  CHECK(count > 0);
}

TEST_CASE("domain pipeline on a constant field") {
  // Eu = (+-1, 0), so M(Eu) = 1 and Mu = 1 on the cube.
  Field c(TorusGrid(2, 8), 2);
  const std::vector<double> w{1.0, 0.0};
  c.shift(w);
  const auto lambdas = geometric_grid(0.05, 1.4, 12);
  const auto d = domain_pipeline(builtin_integrand("heterogeneous", 2, 2), c, lambdas);
  CHECK(d.extension.ext2_constant == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.extension.pointwise_max_ratio == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(d.R_ext2 == doctest::Approx(2.0).epsilon(1e-14));
  REQUIRE(d.rows.size() == lambdas.size());
  for (const auto& row : d.rows) {
    CHECK(row.chain_ok);
    if (row.lambda < 1.0) {
      CHECK(row.trivial);
      CHECK(row.measure_MEu == 1.0);
      CHECK(row.integral_omega == doctest::Approx(0.25).epsilon(1e-14));
    } else {
      CHECK(row.measure_MEu == 0.0);
      CHECK(row.integral_omega == 0.0);
    }
  }
  CHECK(d.pass);
}

TEST_CASE("cube minimiser stays divergence free") {
  Field init = random_divfree_cube_field(2, 8, 3, 2);
  const std::vector<double> mean{1.0, 0.0};
  init.shift(mean);
  const auto run = minimise_on_cube(power_integrand(2, 2, 2.0), init, mean);
  CHECK(cube_divergence_residual(run.final) <= 1e-8);
  CHECK(run.objective == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(run.monotone);
}
