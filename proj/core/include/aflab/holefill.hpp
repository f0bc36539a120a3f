#pragma once

#include <span>
#include <vector>

#include "aflab/torus_field.hpp"

namespace aflab {

/// Hypothesis of the hole-filling lemma:
///   int_{|u| >= R lambda} |u|^p <= C lambda^{p-1} int_{|u| >= lambda} |u|   for lambda >= lambda0.
struct HoleFillingParams {
  double p = 2.0;
  double C = 1.0;
  double R = 2.0;
  double lambda0 = 1.0;
};

void validate(const HoleFillingParams& params);

struct ShellRow {
  int r = 0;
  double lo = 0.0;  // S^r lambda0
  double hi = 0.0;  // S^{r+1} lambda0
  double integral = 0.0;
  double ratio_to_previous = 0.0;  // 0 when the previous shell is empty
  double bound = 0.0;              // decay^r ||u||_p^p
  bool ok = true;
};

struct HoleFillingReport {
  HoleFillingParams params;
  double S = 0.0;
  double decay = 0.0;
  double eps0 = 0.0;

  double lp_norm_p = 0.0;  // ||u||_p^p
  std::vector<ShellRow> shell_table;
  int first_violation = -1;
  bool decay_pass = false;

  double eps = 0.0;
  double lp_eps_estimate = 0.0;     // int_{|u| >= lambda0} |u|^{p+eps}
  double shell_majorant = 0.0;      // sum_r (S^{r+1} lambda0)^eps shell_r
  double geometric_majorant = 0.0;  // lambda0^eps S^eps ||u||_p^p / (1 - S^eps decay)
  bool eps_in_guarantee = true;
  bool higher_norm_ok = false;

  bool pass = false;
};

/// S = max{(2C)^{1/(p-1)}, R}, decay = 2C/(2C+1), eps0 = ln((2C+1)/2C) / (p ln S).
HoleFillingReport derive_constants(const HoleFillingParams& params);

struct ReverseRow {
  double lambda = 0.0;
  double lhs = 0.0;      // int_{|u| >= R lambda} |u|^p
  double divisor = 0.0;  // lambda^{p-1} int_{|u| >= lambda} |u|
  double ratio = 0.0;
  bool empty = false;    // {|u| >= lambda} has no cell
  bool fail = false;     // zero divisor with positive lhs
};

struct ReverseFit {
  std::vector<ReverseRow> rows;
  double C_fit = 0.0;
  double lambda0 = 0.0;
  bool pass = true;
};

ReverseFit fit_reverse_estimate(std::span<const double> magnitudes, double p, double R,
                                std::span<const double> lambdas);
ReverseFit fit_reverse_estimate(const Field& u, double p, double R,
                                std::span<const double> lambdas);

/// Fills the shell table of `report` (constants must already be derived).
void verify_decay(std::span<const double> magnitudes, HoleFillingReport& report);
void verify_decay(const Field& u, HoleFillingReport& report);

/// Quadrature of the L^{p+eps} tail plus both majorants; returns the quadrature.
/// Runs verify_decay first if the shell table is empty.
double higher_norm(std::span<const double> magnitudes, HoleFillingReport& report, double eps);
double higher_norm(const Field& u, HoleFillingReport& report, double eps);

struct TailDecayRow {
  double lambda = 0.0;
  double ratio = 0.0;  // int_{|u| >= S lambda} |u|^p / int_{|u| >= lambda} |u|^p
  bool ok = true;
};

/// The absorbed inequality int_{|u|>=S lambda}|u|^p <= decay int_{|u|>=lambda}|u|^p,
/// evaluated at each lambda >= lambda0.
std::vector<TailDecayRow> tail_decay_check(std::span<const double> magnitudes,
                                           const HoleFillingReport& report,
                                           std::span<const double> lambdas);

struct HoleFillingRun {
  ReverseFit fit;
  HoleFillingReport report;
  /// Largest reverse-estimate ratio at the shell edges S^k lambda0; C is raised to
  /// cover it so the constant is valid at every level the decay proof uses.
  double edge_ratio = 0.0;
  int refits = 0;
};

/// fit_reverse_estimate, derive_constants, verify_decay and higher_norm at
/// eps = eps_fraction * eps0. C_fit = 0 is replaced by `c_floor`.
HoleFillingRun run_hole_filling(std::span<const double> magnitudes, double p, double R,
                                std::span<const double> lambdas, double eps_fraction = 0.5,
                                double c_floor = 1e-6);

/// start, start*ratio, ..., count values.
std::vector<double> geometric_grid(double start, double ratio, int count);

}  // namespace aflab
