#include "aflab/minimise.hpp"

#include <algorithm>
#include <cmath>

#include "aflab/error.hpp"

namespace aflab {

namespace {

void reset_mean(Field& u, std::span<const double> target) {
  const auto m = u.mean();
  std::vector<double> shift(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) shift[i] = target[i] - m[i];
  u.shift(shift);
}

double mean_error(const Field& u, std::span<const double> target) {
  const auto m = u.mean();
  double e = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) e = std::max(e, std::abs(m[i] - target[i]));
  return e;
}

}  // namespace

MinimiserRun minimise_with(const Integrand& f, const Projection& project, const Field& init,
                           std::span<const double> mean, const MinimiseOptions& options) {
  if (!f.subgradient) throw LabError(ErrorCode::bad_integrand, f.name + " has no subgradient");
  const std::vector<double> target(mean.begin(), mean.end());
  if (target.size() != static_cast<std::size_t>(init.channels()))
    throw LabError(ErrorCode::invalid_input, "mean constraint has wrong length");
  for (double v : target)
    if (!std::isfinite(v)) throw LabError(ErrorCode::invalid_input, "mean constraint not finite");

  MinimiserRun run;
  Field u = project(init);
  reset_mean(u, target);
  double I = evaluate_I(f, u);
  run.history.push_back(I);
  double tau = options.initial_step;
  const std::vector<double> zero(target.size(), 0.0);

  for (int it = 0; it < options.max_iterations; ++it) {
    Field g = project(subgradient_field(f, u));
    reset_mean(g, zero);
    const double gnorm = l2_norm(g);
    run.projected_grad_norm = gnorm;
    if (gnorm <= options.tolerance * (1.0 + std::abs(I))) {
      run.converged = true;
      break;
    }
    bool accepted = false;
    for (int b = 0; b < options.max_backtracks; ++b) {
      Field trial = u;
      for (std::size_t k = 0; k < trial.values().size(); ++k)
        trial.values()[k] -= tau * g.values()[k];
      const double It = evaluate_I(f, trial);
      if (It <= I - options.armijo * tau * gnorm * gnorm) {
        u = std::move(trial);
        I = It;
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    run.iterations = it + 1;
    if (!accepted) break;  // no descent at machine resolution; reported as not converged
    tau *= 2.0;
    if (options.reproject_every > 0 && run.iterations % options.reproject_every == 0) {
      u = project(u);
      reset_mean(u, target);
      I = evaluate_I(f, u);
    }
    if (I > run.history.back()) run.monotone = false;
    run.history.push_back(I);
  }

  u = project(u);
  reset_mean(u, target);
  run.objective = evaluate_I(f, u);
  run.mean_error = mean_error(u, target);
  run.final = std::move(u);
  return run;
}

MinimiserRun minimise(const Integrand& f, const DifferentialOperator& op, const Field& init,
                      std::optional<std::vector<double>> mean, const MinimiseOptions& options) {
  if (init.channels() != op.source_dim() || init.grid().dim() != op.grid_dim())
    throw LabError(ErrorCode::incompatible_operator, "initial field does not match operator");
  const std::vector<double> target = mean ? *mean : init.mean();
  const KernelProjector projector(op, init.grid());
  MinimiserRun run = minimise_with(
      f, [&projector](const Field& w) { return projector.project(w); }, init, target, options);
  run.kernel_residual = residual_norm(op, run.final);
  return run;
}

namespace {

double region_power(std::span<const double> mags, const std::vector<bool>& region, double p) {
  double s = 0.0;
  for (std::size_t c = 0; c < mags.size(); ++c)
    if (region[c]) s += std::pow(mags[c], p);
  return s / static_cast<double>(mags.size());
}

double region_measure(const std::vector<bool>& region) {
  return static_cast<double>(std::count(region.begin(), region.end(), true)) /
         static_cast<double>(region.size());
}

ComparisonRow compare_with(const Integrand& f, const Field& u, const MaximalField& mu,
                           double lambda, PotentialKind kind, const TruncationOptions& options,
                           TruncationResult& t) {
  const GrowthSpec& s = f.spec;
  const double p = s.p;
  t = lipschitz_truncate(u, mu, lambda, kind, options);
  const auto mags = u.magnitudes();

  ComparisonRow row;
  row.lambda = lambda;
  row.I_u = evaluate_I(f, u);
  row.I_trunc = evaluate_I(f, t.truncated);
  row.difference = row.I_trunc - row.I_u;
  const double tol = 1e-8 * (1.0 + std::abs(row.I_u));
  row.minimality_ok = row.difference >= -tol;
  row.bad_cells = t.bad_cells;
  row.trivial = t.trivial;

  const auto big_mu = maximal_superlevel(mu, lambda);
  std::vector<bool> E = big_mu;
  for (std::size_t c = 0; c < E.size(); ++c) E[c] = E[c] || t.bad_set[c];
  row.measure_E = region_measure(E);
  row.measure_Mu = region_measure(big_mu);
  row.integral_E = region_power(mags, E, p);
  row.integral_Mu = region_power(mags, big_mu, p);
  row.C_A = t.linf_ratio;

  const double level = std::pow(row.C_A * lambda, p) * s.nu + s.c;
  row.upper_bound = -row.integral_E + row.measure_E * level;
  row.upper_ok = row.difference <= row.upper_bound + tol;
  row.level_bound = level * row.measure_E;
  row.level_ok = row.integral_Mu <= row.level_bound * (1.0 + 1e-12) + tol;
  row.lambda0 = (row.C_A > 0.0 && s.c > 0.0) ? std::pow(s.c, 1.0 / p) / (row.C_A * std::pow(s.nu, 1.0 / p))
                                             : 0.0;
  row.above_lambda0 = lambda > row.lambda0;

  row.widman_lambda = 0.5 * lambda;
  row.widman_lhs = shell_stats(mags, lambda, kInfinity, p).integral_up;
  row.widman_divisor = std::pow(row.widman_lambda, p - 1.0) *
                       shell_stats(mags, row.widman_lambda, kInfinity, p).integral_u;
  row.widman_ratio = row.widman_divisor > 0.0 ? row.widman_lhs / row.widman_divisor
                                              : (row.widman_lhs > 0.0 ? kInfinity : 0.0);
  return row;
}

}  // namespace

ComparisonRow compare_truncation(const Integrand& f, const Field& u, const MaximalField& mu,
                                 double lambda, PotentialKind kind,
                                 const TruncationOptions& options) {
  TruncationResult t;
  return compare_with(f, u, mu, lambda, kind, options, t);
}

MeanComparisonRow compare_truncation_mean(const Integrand& f, const Field& u,
                                          std::span<const double> u0, const MaximalField& mu,
                                          double lambda, PotentialKind kind,
                                          const TruncationOptions& options) {
  if (u0.size() != static_cast<std::size_t>(u.channels()))
    throw LabError(ErrorCode::invalid_input, "mean constraint has wrong length");
  TruncationResult t;
  MeanComparisonRow out;
  out.base = compare_with(f, u, mu, lambda, kind, options, t);
  const GrowthSpec& s = f.spec;
  const double p = s.p;
  const double cell = u.grid().cell_measure();

  const auto tm = t.truncated.mean();
  std::vector<double> shift(tm.size());
  double shift2 = 0.0;
  for (std::size_t i = 0; i < tm.size(); ++i) {
    shift[i] = u0[i] - tm[i];
    shift2 += shift[i] * shift[i];
  }
  out.shift_norm = std::sqrt(shift2);
  Field bar = t.truncated;
  bar.shift(shift);
  out.shifted_residual =
      residual_norm(kernel_operator(kind, u.grid().dim(), u.channels(), options.scheme), bar);

  out.I_bar = evaluate_I(f, bar);
  const double tol = 1e-8 * (1.0 + std::abs(out.base.I_u));
  out.minimality_gap = out.I_bar - out.base.I_u;
  out.minimality_ok = out.minimality_gap >= -tol;

  out.continuity_gap = std::abs(out.I_bar - out.base.I_trunc);
  double bound = 0.0;
  double moved = 0.0;
  for (std::size_t c = 0; c < u.cell_count(); ++c) {
    bound += 1.0 + std::pow(bar.magnitude(c), p - 1.0) + std::pow(t.truncated.magnitude(c), p - 1.0);
    if (t.bad_set[c]) {
      double d = 0.0;
      for (int ch = 0; ch < u.channels(); ++ch) {
        const double e = u(c, ch) - t.truncated(c, ch);
        d += e * e;
      }
      moved += std::sqrt(d);
    }
  }
  out.continuity_bound = s.L * bound * cell * out.shift_norm;
  out.continuity_ok = s.L > 0.0 ? out.continuity_gap <= out.continuity_bound * (1.0 + 1e-12) + tol
                                : true;
  out.shift_bound = moved * cell;
  // mean u = u0 up to the feasibility tolerance of the minimiser
  out.shift_ok = out.shift_norm <= out.shift_bound + 1e-8 * (1.0 + std::sqrt(shift2));

  const auto mags = u.magnitudes();
  const double divisor = (1.0 + std::pow(lambda, p - 1.0)) *
                         shell_stats(mags, lambda, kInfinity, p).integral_u;
  out.measured_constant = divisor > 0.0 ? out.continuity_gap / divisor
                                        : (out.continuity_gap > tol ? kInfinity : 0.0);

  if (s.pi) {
    const QuasiaffineForm& pi = *s.pi;
    double bad_sum = 0.0;
    for (std::size_t c = 0; c < u.cell_count(); ++c)
      if (t.bad_set[c]) bad_sum += pi(u.at(c)) - pi(t.truncated.at(c));
    out.pi_identity_residual = std::abs(pi(u0) - pi(tm) - bad_sum * cell);
    out.pi_ok = out.pi_identity_residual <= 1e-8;
  }
  return out;
}

}  // namespace aflab
