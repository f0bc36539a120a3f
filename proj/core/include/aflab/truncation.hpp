#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aflab/constraint.hpp"
#include "aflab/maximal.hpp"
#include "aflab/torus_field.hpp"

namespace aflab {

/// Which potential represents the A-free field:
///   gradient  u = grad v (curl-free, any n, one potential per row)
///   stream2d  u = (-d2 psi, d1 psi) (div-free, n = 2, one stream function per row)
enum class PotentialKind { gradient, stream2d };

std::string to_string(PotentialKind k);
PotentialKind potential_kind_from_string(const std::string& s);

/// Operator annihilating fields of the given kind with `channels` channels on an n-grid.
DifferentialOperator kernel_operator(PotentialKind kind, int n, int channels, Scheme scheme);

struct PotentialOptions {
  Scheme scheme = Scheme::spectral;
  /// Subtract the mean instead of rejecting nonzero-mean input.
  bool allow_mean = false;
  double kernel_tolerance = 1e-8;
};

struct PotentialResult {
  Field potential;  // one channel per row, zero mean
  std::vector<double> mean;
};

PotentialResult recover_potential(const Field& u, PotentialKind kind,
                                  const PotentialOptions& options = {});

/// Forward-difference gradient of a potential, rotated for stream2d.
Field potential_to_field(const Field& potential, PotentialKind kind);

struct TruncationOptions {
  /// Scheme of the kernel the input lives in (and of the potential recovery).
  Scheme scheme = Scheme::forward_difference;
  /// Lipschitz budget c_L; <= 0 selects 2^n * n.
  double lipschitz_factor = 0.0;
  double kernel_tolerance = 1e-8;
  double change_tolerance = 1e-12;
  /// Extend with the Lipschitz constant of the potential on {Mu < lambda} (capped by
  /// the budget) instead of the full budget.
  bool tight_lipschitz = true;
};

struct TruncationResult {
  Field truncated;
  double lambda = 0.0;
  std::vector<bool> bad_set;
  std::size_t bad_cells = 0;
  double linf_ratio = 0.0;
  /// max |forward-difference A(u~)| / (N max|u~|), pointwise in physical space.
  double residual = 0.0;
  /// ||A u~|| / ||u~|| for the spectral operator, diagnostic only.
  double spectral_residual = 0.0;
  std::size_t inclusion_violations = 0;
  double lipschitz_constant = 0.0;  // c_L * lambda
  double measured_lipschitz = 0.0;  // Lipschitz constant of the potential on {Mu < lambda}
  double linf_bound = 0.0;          // c_L sqrt(n) lambda + |mean|
  bool trivial = false;             // G = {Mu < lambda} was empty
};

double default_lipschitz_factor(int n);

TruncationResult lipschitz_truncate(const Field& u, double lambda, PotentialKind kind,
                                    const TruncationOptions& options = {});
TruncationResult lipschitz_truncate(const Field& u, const MaximalField& mu, double lambda,
                                    PotentialKind kind, const TruncationOptions& options = {});

/// Cut |u| > lambda to zero, then project onto ker A: the non-local negative control.
TruncationResult naive_cut_project(const Field& u, const DifferentialOperator& op, double lambda);

/// Chebyshev one-cell dilation of a cell mask.
std::vector<bool> dilate(const TorusGrid& grid, const std::vector<bool>& mask);

struct TpRow {
  double lambda = 0.0;
  double linf_ratio = 0.0;
  std::size_t inclusion_violations = 0;
  double residual = 0.0;
  std::size_t bad_cells = 0;
  bool trivial = false;
  bool within_budget = true;
};

struct TpReport {
  std::vector<TpRow> rows;
  double budget = 0.0;  // declared C(A)
  double max_linf_ratio = 0.0;
  /// max / min linf_ratio over rows that changed the field (1 if fewer than two).
  double linf_spread = 1.0;
  bool pass = true;
};

TpReport verify_tp(const Field& u, std::span<const double> lambdas, PotentialKind kind,
                   const TruncationOptions& options = {}, std::optional<double> budget = {});

}  // namespace aflab
