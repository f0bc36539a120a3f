#include <cmath>
#include <vector>

#include "aflab/error.hpp"
#include "aflab/holefill.hpp"
#include "aflab/pipeline.hpp"
#include "doctest.h"

using namespace aflab;

namespace {

std::vector<double> plateaus(std::initializer_list<std::pair<int, double>> parts) {
  std::vector<double> m;
  for (auto [count, value] : parts) m.insert(m.end(), count, value);
  return m;
}

// Mean of |u|^q over cells with lo <= |u| < hi.
double band(const std::vector<double>& m, double lo, double hi, double q) {
  double s = 0.0;
  for (double v : m)
    if (v >= lo && v < hi) s += std::pow(v, q);
  return s / m.size();
}

}  // namespace

TEST_CASE("derived constants") {
  const auto a = derive_constants({2.0, 2.0, 2.0, 1.0});
  CHECK(a.S == 4.0);
  CHECK(a.decay == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(a.eps0 == doctest::Approx(std::log(1.25) / (2.0 * std::log(4.0))).epsilon(1e-15));

  const auto b = derive_constants({2.0, 0.5, 3.0, 1.0});
  CHECK(b.S == 3.0);
  CHECK(b.decay == 0.5);
  CHECK(b.eps0 == doctest::Approx(std::log(2.0) / (2.0 * std::log(3.0))).epsilon(1e-15));

  // (2C)^{1/(p-1)} wins when the field is far from the reverse estimate.
  const auto c = derive_constants({1.5, 4.0, 2.0, 1.0});
  CHECK(c.S == doctest::Approx(64.0).epsilon(1e-14));

  try {
    derive_constants({2.0, 0.25, 1.0, 1.0});
    FAIL("expected degenerate step");
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::degenerate_step);
  }
  CHECK_THROWS_AS(derive_constants({1.0, 1.0, 2.0, 1.0}), LabError);
  CHECK_THROWS_AS(derive_constants({2.0, 0.0, 2.0, 1.0}), LabError);
  CHECK_THROWS_AS(derive_constants({2.0, 1.0, 0.5, 1.0}), LabError);
  CHECK_THROWS_AS(derive_constants({2.0, 1.0, 2.0, 0.0}), LabError);
}

TEST_CASE("reverse estimate on two plateaus") {
  const Field u = two_plateau_field();
  const std::vector<double> lambdas{0.75, 1.5, 3.0};
  const auto fit = fit_reverse_estimate(u, 2.0, 2.0, lambdas);
  REQUIRE(fit.rows.size() == 3);
  // lhs = 16/10 until R lambda passes 4; divisor = lambda * mean of |u| above lambda.
  CHECK(fit.rows[0].ratio == doctest::Approx(1.6 / (0.75 * 1.3)).epsilon(1e-14));
  CHECK(fit.rows[1].ratio == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  CHECK(fit.rows[2].ratio == 0.0);
  CHECK(fit.C_fit == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  CHECK(fit.lambda0 == 1.5);
  CHECK(fit.pass);

  const auto run = run_hole_filling(u.magnitudes(), 2.0, 2.0, lambdas);
  CHECK(run.fit.C_fit == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  CHECK(run.report.params.C >= run.edge_ratio);
  CHECK(run.report.pass);

  CHECK_THROWS_AS(fit_reverse_estimate(Field(TorusGrid(1, 8), 1), 2.0, 2.0, lambdas), LabError);
  const std::vector<double> unsorted{1.0, 0.5};
  CHECK_THROWS_AS(fit_reverse_estimate(u, 2.0, 2.0, unsorted), LabError);
}

TEST_CASE("reverse estimate is scale invariant") {
  const auto m = plateaus({{50, 0.5}, {30, 1.5}, {15, 3.0}, {5, 7.0}});
  std::vector<double> m2 = m;
  for (double& v : m2) v *= 2.0;
  const auto lambdas = geometric_grid(0.4, 1.5, 8);
  std::vector<double> l2 = lambdas;
  for (double& l : l2) l *= 2.0;
  const auto a = fit_reverse_estimate(m, 2.5, 2.0, lambdas);
  const auto b = fit_reverse_estimate(m2, 2.5, 2.0, l2);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(b.rows[i].ratio == doctest::Approx(a.rows[i].ratio).epsilon(1e-13));
    if (i > 0) CHECK(a.rows[i].lhs <= a.rows[i - 1].lhs);
  }
  const auto g = geometric_grid(1.0, 2.0, 4);
  CHECK(g == std::vector<double>{1.0, 2.0, 4.0, 8.0});
}

TEST_CASE("shell decay on layered plateaus") {
  // S = 4, decay = 0.8; shells [1,4), [4,16), [16,64).
  const auto m = plateaus({{90, 1.0}, {9, 4.0}, {1, 16.0}});
  auto rep = derive_constants({2.0, 2.0, 2.0, 1.0});
  verify_decay(m, rep);
  CHECK(rep.lp_norm_p == doctest::Approx(4.9).epsilon(1e-14));
  REQUIRE(rep.shell_table.size() == 3);
  double bound = 4.9;
  for (int r = 0; r < 3; ++r) {
    const auto& row = rep.shell_table[r];
    CHECK(row.lo == std::pow(4.0, r));
    CHECK(row.integral == doctest::Approx(band(m, row.lo, row.hi, 2.0)).epsilon(1e-14));
    CHECK(row.bound == doctest::Approx(bound).epsilon(1e-14));
    bound *= 0.8;
  }
  CHECK(rep.decay_pass);
  CHECK(rep.first_violation == -1);

  const std::vector<double> lambdas{0.5, 1.0, 4.0};
  const auto tail = tail_decay_check(m, rep, lambdas);
  REQUIRE(tail.size() == 2);
  CHECK(tail[0].ratio == doctest::Approx(4.0 / 4.9).epsilon(1e-14));
  CHECK_FALSE(tail[0].ok);

  // Five top cells instead of one overload the third shell.
  const auto heavy = plateaus({{86, 1.0}, {9, 4.0}, {5, 16.0}});
  auto bad = derive_constants({2.0, 2.0, 2.0, 1.0});
  verify_decay(heavy, bad);
  CHECK_FALSE(bad.decay_pass);
  CHECK(bad.first_violation == 2);
  CHECK(bad.shell_table[1].ok);
}

TEST_CASE("higher integrability quadrature") {
  const auto m = plateaus({{60, 0.5}, {30, 1.0}, {9, 4.0}, {1, 16.0}});
  auto rep = derive_constants({2.0, 2.0, 2.0, 1.0});
  const double eps = 0.1;
  const double est = higher_norm(m, rep, eps);
  CHECK(est == doctest::Approx(band(m, 1.0, kInfinity, 2.1)).epsilon(1e-14));
  double majorant = 0.0;
  for (int r = 0; r < 3; ++r) {
    const double lo = std::pow(4.0, r);
    majorant += std::pow(4.0 * lo, eps) * band(m, lo, 4.0 * lo, 2.0);
  }
  CHECK(rep.shell_majorant == doctest::Approx(majorant).epsilon(1e-14));
  CHECK(est <= rep.shell_majorant);
  CHECK(rep.eps_in_guarantee == (eps < rep.eps0));
  CHECK(rep.higher_norm_ok);

  // eps -> 0 recovers the L^p tail.
  auto small = derive_constants({2.0, 2.0, 2.0, 1.0});
  const double tail = higher_norm(m, small, 1e-10);
  CHECK(tail == doctest::Approx(band(m, 1.0, kInfinity, 2.0)).epsilon(1e-8));

  CHECK_THROWS_AS(higher_norm(m, rep, 0.0), LabError);
  HoleFillingReport blank;
  CHECK_THROWS_AS(verify_decay(m, blank), LabError);
}
