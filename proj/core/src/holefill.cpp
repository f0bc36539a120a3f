#include "aflab/holefill.hpp"

#include <algorithm>
#include <cmath>

#include "aflab/error.hpp"

namespace aflab {

void validate(const HoleFillingParams& params) {
  if (!(params.p > 1.0) || !std::isfinite(params.p))
    throw LabError(ErrorCode::invalid_input, "hole filling needs p > 1");
  if (!(params.C > 0.0) || !std::isfinite(params.C))
    throw LabError(ErrorCode::invalid_input, "hole filling needs C > 0");
  if (!(params.R >= 1.0) || !std::isfinite(params.R))
    throw LabError(ErrorCode::invalid_input, "hole filling needs R >= 1");
  if (!(params.lambda0 > 0.0) || !std::isfinite(params.lambda0))
    throw LabError(ErrorCode::invalid_input, "hole filling needs lambda0 > 0");
}

HoleFillingReport derive_constants(const HoleFillingParams& params) {
  validate(params);
  HoleFillingReport rep;
  rep.params = params;
  const double two_c = 2.0 * params.C;
  rep.S = std::max(std::pow(two_c, 1.0 / (params.p - 1.0)), params.R);
  if (!(rep.S > 1.0))
    throw LabError(ErrorCode::degenerate_step, "iteration step S = 1: no geometric growth");
  rep.decay = two_c / (two_c + 1.0);
  rep.eps0 = std::log((two_c + 1.0) / two_c) / (params.p * std::log(rep.S));
  return rep;
}

namespace {

double power_sum(std::span<const double> mags, double p) {
  double s = 0.0;
  for (double v : mags) s += std::pow(v, p);
  return s / static_cast<double>(mags.size());
}

}  // namespace

ReverseFit fit_reverse_estimate(std::span<const double> magnitudes, double p, double R,
                                std::span<const double> lambdas) {
  if (lambdas.empty()) throw LabError(ErrorCode::invalid_input, "empty lambda grid");
  if (!(p > 1.0) || !(R >= 1.0)) throw LabError(ErrorCode::invalid_input, "need p > 1, R >= 1");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw LabError(ErrorCode::invalid_input, "lambda must be positive");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
      throw LabError(ErrorCode::invalid_input, "lambda grid must be increasing");
  }
  if (std::none_of(magnitudes.begin(), magnitudes.end(), [](double v) { return v > 0.0; }))
    throw LabError(ErrorCode::degenerate_input, "field vanishes identically");

  ReverseFit fit;
  std::vector<double> running;
  for (double lambda : lambdas) {
    ReverseRow row;
    row.lambda = lambda;
    row.lhs = shell_stats(magnitudes, R * lambda, kInfinity, p).integral_up;
    const LevelSetStats above = shell_stats(magnitudes, lambda, kInfinity, p);
    row.divisor = std::pow(lambda, p - 1.0) * above.integral_u;
    row.empty = above.measure == 0.0;
    if (row.divisor > 0.0) {
      row.ratio = row.lhs / row.divisor;
    } else if (row.lhs > 0.0) {
      row.ratio = kInfinity;
      row.fail = true;
      fit.pass = false;
    }
    if (!row.empty && !row.fail) fit.C_fit = std::max(fit.C_fit, row.ratio);
    running.push_back(fit.C_fit);
    fit.rows.push_back(row);
  }
  // Smallest lambda from which the running maximum is already within 5% of its final value.
  fit.lambda0 = lambdas.back();
  for (std::size_t i = 0; i < running.size(); ++i)
    if (fit.C_fit <= 1.05 * running[i]) {
      fit.lambda0 = lambdas[i];
      break;
    }
  return fit;
}

ReverseFit fit_reverse_estimate(const Field& u, double p, double R,
                                std::span<const double> lambdas) {
  const auto mags = u.magnitudes();
  return fit_reverse_estimate(mags, p, R, lambdas);
}

void verify_decay(std::span<const double> magnitudes, HoleFillingReport& report) {
  if (!(report.S > 1.0)) throw LabError(ErrorCode::invalid_input, "constants not derived");
  const double p = report.params.p;
  const double top = magnitudes.empty()
                         ? 0.0
                         : *std::max_element(magnitudes.begin(), magnitudes.end());
  report.lp_norm_p = power_sum(magnitudes, p);
  report.shell_table.clear();
  report.first_violation = -1;
  report.decay_pass = true;
  double lo = report.params.lambda0;
  double bound = report.lp_norm_p;
  for (int r = 0; lo <= top; ++r) {
    ShellRow row;
    row.r = r;
    row.lo = lo;
    row.hi = lo * report.S;
    row.integral = shell_stats(magnitudes, row.lo, row.hi, p).integral_up;
    row.bound = bound;
    if (r > 0 && report.shell_table.back().integral > 0.0)
      row.ratio_to_previous = row.integral / report.shell_table.back().integral;
    row.ok = row.integral <= bound * (1.0 + 1e-9);
    if (!row.ok && report.first_violation < 0) report.first_violation = r;
    report.decay_pass = report.decay_pass && row.ok;
    report.shell_table.push_back(row);
    lo = row.hi;
    bound *= report.decay;
  }
  report.pass = report.decay_pass;
}

void verify_decay(const Field& u, HoleFillingReport& report) {
  const auto mags = u.magnitudes();
  verify_decay(mags, report);
}

double higher_norm(std::span<const double> magnitudes, HoleFillingReport& report, double eps) {
  if (!(eps > 0.0)) throw LabError(ErrorCode::invalid_input, "eps must be positive");
  if (report.shell_table.empty()) verify_decay(magnitudes, report);
  const double p = report.params.p;
  const double lambda0 = report.params.lambda0;
  report.eps = eps;
  report.eps_in_guarantee = eps < report.eps0;
  report.lp_eps_estimate = shell_stats(magnitudes, lambda0, kInfinity, p + eps).integral_up;

  report.shell_majorant = 0.0;
  for (const auto& row : report.shell_table)
    report.shell_majorant += std::pow(row.hi, eps) * row.integral;
  const double q = std::pow(report.S, eps) * report.decay;
  report.geometric_majorant =
      q < 1.0 ? std::pow(lambda0 * report.S, eps) * report.lp_norm_p / (1.0 - q) : kInfinity;

  const double tol = 1.0 + 1e-9;
  report.higher_norm_ok = std::isfinite(report.lp_eps_estimate) &&
                          report.lp_eps_estimate <= report.shell_majorant * tol;
  if (report.decay_pass)
    report.higher_norm_ok =
        report.higher_norm_ok && report.shell_majorant <= report.geometric_majorant * tol;
  report.pass = report.decay_pass && report.higher_norm_ok;
  return report.lp_eps_estimate;
}

double higher_norm(const Field& u, HoleFillingReport& report, double eps) {
  const auto mags = u.magnitudes();
  return higher_norm(mags, report, eps);
}

std::vector<TailDecayRow> tail_decay_check(std::span<const double> magnitudes,
                                           const HoleFillingReport& report,
                                           std::span<const double> lambdas) {
  std::vector<TailDecayRow> rows;
  const double p = report.params.p;
  for (double lambda : lambdas) {
    if (lambda < report.params.lambda0) continue;
    TailDecayRow row;
    row.lambda = lambda;
    const double outer = shell_stats(magnitudes, report.S * lambda, kInfinity, p).integral_up;
    const double inner = shell_stats(magnitudes, lambda, kInfinity, p).integral_up;
    row.ratio = inner > 0.0 ? outer / inner : 0.0;
    row.ok = outer <= report.decay * inner * (1.0 + 1e-9);
    rows.push_back(row);
  }
  return rows;
}

HoleFillingRun run_hole_filling(std::span<const double> magnitudes, double p, double R,
                                std::span<const double> lambdas, double eps_fraction,
                                double c_floor) {
  HoleFillingRun run;
  run.fit = fit_reverse_estimate(magnitudes, p, R, lambdas);
  HoleFillingParams params{p, std::max(run.fit.C_fit, c_floor), R, run.fit.lambda0};
  const double top = *std::max_element(magnitudes.begin(), magnitudes.end());
  for (;;) {
    run.report = derive_constants(params);
    std::vector<double> edges;
    for (double l = params.lambda0; l <= top; l *= run.report.S) edges.push_back(l);
    run.edge_ratio = 0.0;
    if (!edges.empty()) {
      const ReverseFit at_edges = fit_reverse_estimate(magnitudes, p, R, edges);
      run.edge_ratio = at_edges.C_fit;
      if (!at_edges.pass) run.fit.pass = false;
    }
    if (run.edge_ratio <= params.C || run.refits >= 20) break;
    params.C = run.edge_ratio;
    ++run.refits;
  }
  verify_decay(magnitudes, run.report);
  higher_norm(magnitudes, run.report, eps_fraction * run.report.eps0);
  run.report.pass = run.report.pass && run.fit.pass;
  return run;
}

std::vector<double> geometric_grid(double start, double ratio, int count) {
  if (!(start > 0.0) || !(ratio > 1.0) || count < 1)
    throw LabError(ErrorCode::invalid_input, "geometric grid needs start > 0, ratio > 1, count >= 1");
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) g[i] = start * std::pow(ratio, i);
  return g;
}

}  // namespace aflab
