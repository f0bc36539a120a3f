#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace aflab {

/// Uniform periodic grid on the unit n-torus with N samples per axis.
///
/// Cells are stored row-major: axis 0 varies slowest. The sample of cell
/// (i_0, ..., i_{n-1}) sits at x_j = i_j / N.
class TorusGrid {
 public:
  static constexpr int kMaxDim = 3;

  TorusGrid() = default;
  TorusGrid(int dim, int resolution);

  int dim() const noexcept { return dim_; }
  int resolution() const noexcept { return resolution_; }
  double spacing() const noexcept { return 1.0 / resolution_; }
  std::size_t cell_count() const noexcept { return cells_; }
  double cell_measure() const noexcept { return 1.0 / static_cast<double>(cells_); }

  using MultiIndex = std::array<int, kMaxDim>;

  MultiIndex unravel(std::size_t cell) const noexcept;
  std::size_t ravel(const MultiIndex& idx) const noexcept;
  /// Periodic neighbour of `cell` shifted by `shift` cells along `axis`.
  std::size_t shifted(std::size_t cell, int axis, int shift) const noexcept;
  /// Sample coordinates of `cell` in [0,1)^n.
  std::array<double, kMaxDim> point(std::size_t cell) const noexcept;
  /// Signed frequency of FFT index k: {-N/2+1, ..., N/2}.
  int frequency(int k) const noexcept { return k <= resolution_ / 2 ? k : k - resolution_; }

  bool operator==(const TorusGrid&) const = default;

 private:
  int dim_ = 1;
  int resolution_ = 4;
  std::size_t cells_ = 4;
};

/// Sampled map T_n -> R^m; values are grid-point-major, channel-minor.
class Field {
 public:
  Field() = default;
  Field(const TorusGrid& grid, int channels);
  Field(const TorusGrid& grid, int channels, std::vector<double> values);

  const TorusGrid& grid() const noexcept { return grid_; }
  int channels() const noexcept { return channels_; }
  std::size_t cell_count() const noexcept { return grid_.cell_count(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<double> at(std::size_t cell) noexcept {
    return {values_.data() + cell * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<const double> at(std::size_t cell) const noexcept {
    return {values_.data() + cell * channels_, static_cast<std::size_t>(channels_)};
  }
  double& operator()(std::size_t cell, int ch) noexcept { return values_[cell * channels_ + ch]; }
  double operator()(std::size_t cell, int ch) const noexcept {
    return values_[cell * channels_ + ch];
  }

  /// Euclidean norm over channels at one cell.
  double magnitude(std::size_t cell) const noexcept;
  std::vector<double> magnitudes() const;
  std::vector<double> mean() const;
  double max_magnitude() const noexcept;
  bool all_finite() const noexcept;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s) noexcept;
  /// Adds a constant vector to every cell.
  Field& shift(std::span<const double> offset);

 private:
  TorusGrid grid_;
  int channels_ = 1;
  std::vector<double> values_ = std::vector<double>(4, 0.0);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Builds a field by evaluating `fn(point, out)` at every sample.
Field sample_field(const TorusGrid& grid, int channels,
                   const std::function<void(std::span<const double>, std::span<double>)>& fn);

/// Largest absolute pointwise difference over all channels.
double max_abs_difference(const Field& a, const Field& b);
/// L2 norm (with the normalized cell measure).
double l2_norm(const Field& f);

using Region = std::function<bool(std::size_t)>;

/// N^{-n} * sum over region of |f|^p_exp.
double integrate(const Field& f, double p_exp, const Region& region = {});

struct LevelSetStats {
  double lambda = 0.0;
  double measure = 0.0;
  double integral_u = 0.0;
  double integral_up = 0.0;
};

/// Statistics over the closed superlevel set {|u| >= lambda}.
LevelSetStats superlevel_stats(const Field& u, double lambda, double p_exp);
/// Statistics over the half-open shell {lo <= |u| < hi}; hi may be +infinity.
LevelSetStats shell_stats(const Field& u, double lo, double hi, double p_exp);

/// Same statistics from precomputed magnitudes (avoids recomputing |u|).
LevelSetStats shell_stats(std::span<const double> magnitudes, double lo, double hi, double p_exp);

constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace aflab
