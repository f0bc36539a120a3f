#include <cmath>
#include <vector>

#include "aflab/error.hpp"
#include "aflab/minimise.hpp"
#include "aflab/pipeline.hpp"
#include "doctest.h"

using namespace aflab;

namespace {

Field constant_field(const TorusGrid& g, std::vector<double> w) {
  Field u(g, static_cast<int>(w.size()));
  u.shift(w);
  return u;
}

}  // namespace

TEST_CASE("integrand values") {
  const TorusGrid g(2, 8);
  CHECK(evaluate_I(power_integrand(2, 1, 2.0), constant_field(g, {2.0})) ==
        doctest::Approx(4.0).epsilon(1e-15));

  // |A|^2 - 2 det A vanishes on conformal matrices.
  const Integrand qc = quasiconformal_integrand(2, 2.0);
  CHECK(evaluate_I(qc, constant_field(g, {1.0, 0.0, 0.0, 1.0})) <= 1e-15);
  CHECK(evaluate_I(qc, constant_field(g, {2.0, 0.0, 0.0, 1.0})) == doctest::Approx(1.0));
  CHECK(evaluate_I(qc, constant_field(g, {0.6, -0.8, 0.8, 0.6})) <= 1e-15);

  // Fenchel equality at sigma = |eps|^{p-2} eps.
  const Integrand pl = plap_coupled_integrand(3.0);
  CHECK(std::abs(evaluate_I(pl, constant_field(g, {2.0, 0.0, 4.0, 0.0}))) <= 1e-13);
  CHECK(evaluate_I(pl, constant_field(g, {1.0, 0.0, 0.0, 0.0})) == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(builtin_integrand("nope", 2, 2), LabError);
  CHECK_THROWS_AS(quasiconformal_integrand(4, 1.0), LabError);
}

TEST_CASE("growth checks") {
  CHECK(check_growth(power_integrand(2, 2, 2.0), 200, 3.0).pass());
  CHECK(check_growth(builtin_integrand("heterogeneous", 2, 2), 200, 3.0).pass());
  CHECK(check_growth(builtin_integrand("quasiconformal", 2, 4), 200, 3.0).pass());

  Integrand broken = power_integrand(2, 2, 2.0);
  broken.value = [](std::span<const double>, std::span<const double> w) {
    return 2.0 * (w[0] * w[0] + w[1] * w[1]);
  };
  const auto rep = check_growth(broken, 200, 3.0);
  CHECK_FALSE(rep.pass());
  CHECK(rep.upper_violations > 0);
  CHECK(rep.worst_point.size() == 2);

  // |w|^2 has L = 1 in the (1 + |w| + |w'|) modulus.
  CHECK(measure_continuity_constant(power_integrand(2, 2, 2.0), 500, 3.0) <= 1.0 + 1e-12);
}

TEST_CASE("minimising |w|^2 returns the constant") {
  const TorusGrid g(2, 16);
  const auto op = divergence(2).with_scheme(Scheme::forward_difference);
  Field init = random_test_field(op, g, 2, 3);
  const std::vector<double> mean{1.0, 0.0};
  init.shift(mean);
  const auto run = minimise(power_integrand(2, 2, 2.0), op, init, mean);
  CHECK(run.converged);
  CHECK(run.monotone);
  // Jensen: I >= |mean|^2 with equality only at the constant.
  CHECK(run.objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(run.kernel_residual <= 1e-8);
  CHECK(run.mean_error <= 1e-12);
  CHECK(run.history.front() > run.objective);
}

TEST_CASE("quasiconformal minimiser reaches zero") {
  const TorusGrid g(2, 16);
  const auto op = curl(2, 2).with_scheme(Scheme::forward_difference);
  Field init = 0.3 * random_test_field(op, g, 4, 3);
  const std::vector<double> id{1.0, -0.5, 0.5, 1.0};
  init.shift(id);
  const auto run = minimise(builtin_integrand("quasiconformal", 2, 4), op, init, id);
  CHECK(run.objective <= 1e-8);
  CHECK(run.kernel_residual <= 1e-8);
}

TEST_CASE("truncation comparison") {
  const Integrand f = power_integrand(2, 2, 2.0);

  const Field u = concentrating_gradient_field(32, 0.05);
  const MaximalField mu = maximal(u);
  const auto same = compare_truncation(f, u, mu, 1.01 * mu.max(), PotentialKind::gradient);
  CHECK(same.difference == 0.0);
  CHECK(same.bad_cells == 0);
  CHECK(same.minimality_ok);

  // A concentrated gradient is not a minimiser: truncation lowers the energy.
  const auto cut = compare_truncation(f, u, mu, 0.5 * mu.max(), PotentialKind::gradient);
  CHECK(cut.bad_cells > 0);
  CHECK(cut.difference < 0.0);
  CHECK_FALSE(cut.minimality_ok);
  CHECK(cut.measure_E >= cut.measure_Mu);
  CHECK(cut.I_trunc - cut.I_u == doctest::Approx(cut.difference));
  CHECK(cut.integral_Mu <= cut.integral_E * (1.0 + 1e-12));

  const std::vector<double> zero_mean{0.0, 0.0};
  const auto m = compare_truncation_mean(f, u, zero_mean, mu, 1.01 * mu.max(),
                                         PotentialKind::gradient);
  CHECK(m.shift_norm <= 1e-14);
  CHECK(m.I_bar == doctest::Approx(m.base.I_u).epsilon(1e-13));
  CHECK(m.minimality_ok);
}
