#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "aflab/constraint.hpp"
#include "aflab/torus_field.hpp"

namespace aflab {

/// Growth envelope  |w|^p - alpha Pi(w) <= f(x, w) <= nu |w|^p + c  and the
/// continuity modulus  |f(x,w) - f(x,w')| <= L (1 + |w|^{p-1} + |w'|^{p-1}) |w - w'|.
struct GrowthSpec {
  double p = 2.0;
  double nu = 1.0;
  double c = 0.0;
  double alpha = 0.0;
  double L = 0.0;  // 0: continuity not claimed
  std::optional<QuasiaffineForm> pi;
};

void validate(const GrowthSpec& spec);

struct Integrand {
  using Value = std::function<double(std::span<const double> x, std::span<const double> w)>;
  using Subgradient =
      std::function<void(std::span<const double> x, std::span<const double> w, std::span<double> g)>;

  std::string name;
  int grid_dim = 2;
  int channels = 1;
  Value value;
  Subgradient subgradient;  // may be empty for evaluation-only integrands
  GrowthSpec spec;
};

/// |w|^p.
Integrand power_integrand(int grid_dim, int channels, double p);

/// a(x)|w|^p + b(x)|w|. a = nu on alternating stripes across axis `axis` (bands
/// periods per unit length) and 1 elsewhere; b = b_max on the stripes where a = 1.
Integrand heterogeneous_integrand(int grid_dim, int channels, double p, double nu, int bands = 2,
                                  int axis = 1, double b_max = 0.0);

/// max{0, |A|^n - K det A} on n x n matrices (row-major).
Integrand quasiconformal_integrand(int n, double K);

/// |eps|^p/p + |sigma|^q/q - eps.sigma with q = p/(p-1), on (eps_1, eps_2, sigma_1, sigma_2).
Integrand plap_coupled_integrand(double p);

/// f(x, w) + g(x).w with g a field sampled at the nearest cell.
Integrand with_linear_load(Integrand f, const Field& g);

/// power, heterogeneous, quasiconformal, plap-coupled with default parameters.
Integrand builtin_integrand(const std::string& name, int grid_dim, int channels);

/// int f(x, u(x)) dx by cell quadrature.
double evaluate_I(const Integrand& f, const Field& u);
/// Subgradient field x -> g(x, u(x)).
Field subgradient_field(const Integrand& f, const Field& u);

struct GrowthReport {
  int samples = 0;
  int lower_violations = 0;
  int upper_violations = 0;
  int continuity_violations = 0;
  double min_lower_slack = kInfinity;  // f - (|w|^p - alpha Pi)
  double min_upper_slack = kInfinity;  // nu|w|^p + c - f
  double max_continuity_ratio = 0.0;   // observed L
  std::vector<double> worst_point;     // w of the first violation
  bool pass() const noexcept {
    return lower_violations == 0 && upper_violations == 0 && continuity_violations == 0;
  }
};

GrowthReport check_growth(const Integrand& f, int samples, double radius, std::uint64_t seed = 3);

/// Largest sampled |f(w) - f(w')| / ((1 + |w|^{p-1} + |w'|^{p-1}) |w - w'|).
double measure_continuity_constant(const Integrand& f, int samples, double radius,
                                   std::uint64_t seed = 5);

}  // namespace aflab
