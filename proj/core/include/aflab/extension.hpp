#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aflab/holefill.hpp"
#include "aflab/integrands.hpp"
#include "aflab/maximal.hpp"
#include "aflab/minimise.hpp"
#include "aflab/torus_field.hpp"
#include "aflab/truncation.hpp"

namespace aflab {

/// Omega as a union of grid cells.
struct DomainMask {
  TorusGrid grid;
  std::vector<bool> inside;
  /// Periodic Euclidean distance (physical units) from the cell to the nearest
  /// outside cell, minus one spacing; 0 exactly on cells adjacent to the complement.
  std::vector<double> boundary_dist;

  std::size_t inside_count() const noexcept;
};

DomainMask make_mask(const TorusGrid& grid, std::vector<bool> inside);
/// (0, 1/2)^n: cells with every index below N/2.
DomainMask cube_mask(const TorusGrid& grid);
/// S_rho = {c2^{-1} rho <= dist(x, boundary) <= c2 rho} inside Omega (diagnostic).
std::vector<bool> shell_set(const DomainMask& mask, double rho, double c2);

/// The cube (0,1/2)^n is sampled on TorusGrid(n, Nh) storage: cell i has centre (i + 1/2) / (2 Nh).

/// Divergence of a cube field by central differences with mirror ghosts
/// (the ghost beyond a face repeats the boundary cell). Spacing 1/(2 Nh).
Field cube_divergence(const Field& cube);
/// max |cube_divergence| / (2 Nh max|u|).
double cube_divergence_residual(const Field& cube);
/// Central-difference divergence residual of a torus field, same normalisation.
double torus_divergence_residual(const Field& u);

/// Reflection across every axis: cell i -> 2 Nh - 1 - i, the reflected axis keeps its
/// component and all other components change sign. Output lives on TorusGrid(n, 2 Nh).
Field reflect_extend_divfree(const Field& cube, double tolerance = 1e-8);
/// Zero extension of a cube field to TorusGrid(n, 2 Nh).
Field zero_extend(const Field& cube);
/// Cells of the lower cube.
Field restrict_to_cube(const Field& torus);

/// Random field with exactly vanishing cube divergence, built from products of
/// cos / sin modes with integer frequencies up to `band`.
Field random_divfree_cube_field(int n, int half_resolution, std::uint64_t seed, int band);

struct ExtensionReport {
  double residual = 0.0;            // torus divergence residual of Eu
  double agreement_error = 0.0;     // max |Eu - u| on Omega
  double ext2_constant = 0.0;       // sup_Omega M(Eu) / Mu
  bool ext2_fail = false;           // Mu = 0 somewhere in Omega while M(Eu) > 0
  double c1 = 0.0;                  // (ext) constants, best C1 over the C2 grid
  double c2 = 0.0;
  bool ext1_finite = false;
  double pointwise_max_ratio = 0.0;  // sup_Omega M(Eu) / (2^n Mu)
  bool pointwise_bound_ok = false;
  std::vector<double> c3_map;       // per torus cell, M(Eu)/Mu on Omega and 0 outside
};

/// M(Eu) <= 2^n M(u zero-extended) on the cube.
ExtensionReport verify_pointwise_maximal_bound(const Field& cube, const Field& extended);

/// (ext) and (ext2) with measured constants. `u_zero` and `extended` live on the torus.
ExtensionReport verify_ext_conditions(const Field& u_zero, const Field& extended,
                                      const DomainMask& mask, std::span<const double> lambdas);

/// Orthogonal projection of cube fields onto the cube-divergence-free space:
/// restrict o P o E with P the central-difference kernel projection on the torus.
class CubeProjector {
 public:
  CubeProjector(int n, int half_resolution);
  Field operator()(const Field& cube) const;

 private:
  KernelProjector torus_;
};

MinimiserRun minimise_on_cube(const Integrand& f, const Field& init, std::span<const double> mean,
                              const MinimiseOptions& options = {});

struct DomainRow {
  double lambda = 0.0;
  double measure_MEu = 0.0;     // |{M(Eu) >= lambda}|
  double integral_omega = 0.0;  // int_{M(Eu) >= lambda, Omega} |u|^p
  double C_A = 0.0;             // linf ratio of the torus truncation of Eu
  double chain_bound = 0.0;     // (nu C_A^p lambda^p + c) |{M(Eu) >= lambda}|
  bool chain_ok = true;
  bool trivial = false;         // {M(Eu) >= lambda} is the whole torus
  double measured_constant = 0.0;  // integral_omega / (lambda^p |{M(Eu) >= lambda}|)
};

struct DomainReport {
  ExtensionReport extension;
  std::vector<DomainRow> rows;
  /// Route through (ext2): reverse estimate with R = max(1, 2 C3).
  double R_ext2 = 0.0;
  ReverseFit fit_ext2;
  HoleFillingReport holefill_ext2;
  bool ext2_route_ok = false;
  /// Route through (ext): R = max(1, 2 / C2).
  double R_ext = 0.0;
  ReverseFit fit_ext;
  HoleFillingReport holefill_ext;
  bool ext_route_ok = false;
  bool pass = false;
};

/// Extends the cube minimiser, truncates on the torus, measures the extension
/// constants and runs hole filling on u restricted to Omega.
DomainReport domain_pipeline(const Integrand& f, const Field& cube_minimiser,
                             std::span<const double> lambdas, double eps_fraction = 0.5);

}  // namespace aflab
