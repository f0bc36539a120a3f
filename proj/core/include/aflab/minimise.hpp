#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aflab/constraint.hpp"
#include "aflab/integrands.hpp"
#include "aflab/truncation.hpp"

namespace aflab {

struct MinimiseOptions {
  int max_iterations = 2000;
  double tolerance = 1e-6;  // on ||P grad|| / (1 + |I|)
  double initial_step = 1.0;
  double armijo = 1e-4;
  int max_backtracks = 60;
  int reproject_every = 25;
};

struct MinimiserRun {
  Field final;
  double objective = 0.0;
  int iterations = 0;
  double projected_grad_norm = 0.0;
  double kernel_residual = 0.0;
  double mean_error = 0.0;
  bool converged = false;
  bool monotone = true;
  std::vector<double> history;
};

/// Orthogonal projection onto the feasible linear space (mean handled separately).
using Projection = std::function<Field(const Field&)>;

/// Projected subgradient descent with a caller-supplied projection; constants must
/// be feasible so that the mean can be reset after projecting.
MinimiserRun minimise_with(const Integrand& f, const Projection& project, const Field& init,
                           std::span<const double> mean, const MinimiseOptions& options = {});

/// Projected subgradient descent on I(u) = int f(x, u) over A-free fields with the
/// mean fixed to `mean` (or to the mean of `init`).
MinimiserRun minimise(const Integrand& f, const DifferentialOperator& op, const Field& init,
                      std::optional<std::vector<double>> mean = {},
                      const MinimiseOptions& options = {});

/// One lambda of the truncation comparison for an unconstrained-mean minimiser.
struct ComparisonRow {
  double lambda = 0.0;
  double I_u = 0.0;
  double I_trunc = 0.0;
  double difference = 0.0;      // I(u~) - I(u)
  bool minimality_ok = true;    // difference >= -1e-8 (1 + |I(u)|)
  double measure_E = 0.0;       // |{Mu >= lambda} u {u~ != u}|
  double measure_Mu = 0.0;      // |{Mu >= lambda}|
  double integral_E = 0.0;      // int_E |u|^p
  double integral_Mu = 0.0;     // int_{Mu >= lambda} |u|^p
  double C_A = 0.0;             // measured linf_ratio
  double upper_bound = 0.0;     // -int_E |u|^p + |E| (C_A^p lambda^p nu + c)
  bool upper_ok = true;
  double level_bound = 0.0;     // (lambda^p nu C_A^p + c) |E|
  bool level_ok = true;         // int_{Mu >= lambda} |u|^p <= level_bound
  double lambda0 = 0.0;         // c^{1/p} / (C_A nu^{1/p})
  bool above_lambda0 = true;
  // Reverse estimate at level lambda/2 with R = 2.
  double widman_lambda = 0.0;
  double widman_lhs = 0.0;
  double widman_divisor = 0.0;
  double widman_ratio = 0.0;
  std::size_t bad_cells = 0;
  bool trivial = false;
};

ComparisonRow compare_truncation(const Integrand& f, const Field& u, const MaximalField& mu,
                                 double lambda, PotentialKind kind,
                                 const TruncationOptions& options = {});

/// Mean-constrained comparison: u_bar = u~ + (u0 - mean u~).
struct MeanComparisonRow {
  ComparisonRow base;
  double I_bar = 0.0;
  double minimality_gap = 0.0;   // I(u_bar) - I(u)
  bool minimality_ok = true;
  double shift_norm = 0.0;       // |u0 - mean u~|
  double continuity_gap = 0.0;   // |I(u_bar) - I(u~)|
  double continuity_bound = 0.0; // int L (1 + |u_bar|^{p-1} + |u~|^{p-1}) |shift|
  bool continuity_ok = true;
  double shift_bound = 0.0;      // int_{u != u~} |u - u~|
  bool shift_ok = true;          // shift_norm <= shift_bound
  double measured_constant = 0.0;  // continuity_gap / ((1 + lambda^{p-1}) int_{|u|>=lambda}|u|)
  double pi_identity_residual = 0.0;
  bool pi_ok = true;
  double shifted_residual = 0.0;  // A-freeness of u_bar
};

MeanComparisonRow compare_truncation_mean(const Integrand& f, const Field& u,
                                          std::span<const double> u0, const MaximalField& mu,
                                          double lambda, PotentialKind kind,
                                          const TruncationOptions& options = {});

}  // namespace aflab
