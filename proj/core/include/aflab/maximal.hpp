#pragma once

#include <span>
#include <vector>

#include "aflab/torus_field.hpp"

namespace aflab {

/// Centered Hardy-Littlewood maximal function of |u| on the periodic grid.
struct MaximalField {
  TorusGrid grid;
  std::vector<double> values;
  int radii_max = 0;

  double max() const noexcept;
  std::size_t count_at_least(double lambda) const noexcept;
};

enum class MaximalMethod {
  automatic,  // direct up to 4096 cells, FFT ball sums above
  direct,     // fixed-order summation, exact reproducibility
  fft,        // ball sums by FFT convolution, one transform per radius
};

/// Offsets of the periodic Euclidean grid ball of radius r (in cells), sorted
/// by distance; each distinct grid point appears once.
struct BallStencil {
  std::vector<std::array<int, TorusGrid::kMaxDim>> offsets;
  /// ends[r] = number of leading offsets with distance <= r.
  std::vector<std::size_t> ends;
};

BallStencil ball_stencil(const TorusGrid& grid);

/// Mu(x) = max over r in {0, ..., N/2} of the mean of |u| over the ball of radius r.
MaximalField maximal(const Field& u, MaximalMethod method = MaximalMethod::automatic);
MaximalField maximal(const TorusGrid& grid, std::span<const double> magnitudes,
                     MaximalMethod method = MaximalMethod::automatic);

struct WeakTypeRow {
  double lambda = 0.0;
  double measure_maximal_set = 0.0;  // |{Mu >= lambda}|
  double integral_half_level = 0.0;  // int_{|u| >= lambda/2} |u|
  double ratio = 0.0;                // lambda * measure / integral; +inf if unbounded
  bool skipped = false;              // both sides vanish
};

struct WeakTypeReport {
  std::vector<WeakTypeRow> rows;
  double fitted_constant = 0.0;  // max finite ratio
  bool pass = true;              // no infinite ratio
};

WeakTypeReport weak_type_check(const Field& u, std::span<const double> lambdas);
WeakTypeReport weak_type_check(const Field& u, const MaximalField& mu,
                               std::span<const double> lambdas);

/// Cells with Mu >= lambda.
std::vector<bool> maximal_superlevel(const MaximalField& mu, double lambda);

}  // namespace aflab
