#include "aflab/torus_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aflab/error.hpp"

namespace aflab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::invalid_shell: return "invalid-shell";
    case ErrorCode::incompatible_operator: return "incompatible-operator";
    case ErrorCode::not_in_kernel: return "not-in-kernel";
    case ErrorCode::mean_mismatch: return "mean-mismatch";
    case ErrorCode::aliasing_risk: return "aliasing-risk";
    case ErrorCode::degenerate_input: return "degenerate-input";
    case ErrorCode::degenerate_step: return "degenerate-step";
    case ErrorCode::bad_integrand: return "bad-integrand";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

TorusGrid::TorusGrid(int dim, int resolution) : dim_(dim), resolution_(resolution) {
  if (dim < 1 || dim > kMaxDim)
    throw LabError(ErrorCode::invalid_input, "grid dimension must be 1..3, got " + std::to_string(dim));
  if (resolution < 4 || resolution % 2 != 0)
    throw LabError(ErrorCode::invalid_input,
                   "resolution must be even and >= 4, got " + std::to_string(resolution));
  cells_ = 1;
  for (int j = 0; j < dim; ++j) cells_ *= static_cast<std::size_t>(resolution);
}

TorusGrid::MultiIndex TorusGrid::unravel(std::size_t cell) const noexcept {
  MultiIndex idx{0, 0, 0};
  for (int j = dim_ - 1; j >= 0; --j) {
    idx[j] = static_cast<int>(cell % resolution_);
    cell /= resolution_;
  }
  return idx;
}

std::size_t TorusGrid::ravel(const MultiIndex& idx) const noexcept {
  std::size_t cell = 0;
  for (int j = 0; j < dim_; ++j) {
    int i = idx[j] % resolution_;
    if (i < 0) i += resolution_;
    cell = cell * resolution_ + static_cast<std::size_t>(i);
  }
  return cell;
}

std::size_t TorusGrid::shifted(std::size_t cell, int axis, int shift) const noexcept {
  auto idx = unravel(cell);
  idx[axis] += shift;
  return ravel(idx);
}

std::array<double, TorusGrid::kMaxDim> TorusGrid::point(std::size_t cell) const noexcept {
  const auto idx = unravel(cell);
  std::array<double, kMaxDim> x{0.0, 0.0, 0.0};
  for (int j = 0; j < dim_; ++j) x[j] = idx[j] * spacing();
  return x;
}

Field::Field(const TorusGrid& grid, int channels)
    : grid_(grid), channels_(channels), values_(grid.cell_count() * channels, 0.0) {
  if (channels < 1) throw LabError(ErrorCode::invalid_input, "field needs at least one channel");
}

Field::Field(const TorusGrid& grid, int channels, std::vector<double> values)
    : grid_(grid), channels_(channels), values_(std::move(values)) {
  if (channels < 1) throw LabError(ErrorCode::invalid_input, "field needs at least one channel");
  if (values_.size() != grid.cell_count() * channels)
    throw LabError(ErrorCode::invalid_input, "field payload length does not match grid x channels");
}

double Field::magnitude(std::size_t cell) const noexcept {
  if (channels_ == 1) return std::abs(values_[cell]);
  double s = 0.0;
  for (double v : at(cell)) s += v * v;
  return std::sqrt(s);
}

std::vector<double> Field::magnitudes() const {
  std::vector<double> out(cell_count());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = magnitude(c);
  return out;
}

std::vector<double> Field::mean() const {
  std::vector<double> m(channels_, 0.0);
  for (std::size_t c = 0; c < cell_count(); ++c)
    for (int k = 0; k < channels_; ++k) m[k] += (*this)(c, k);
  for (double& v : m) v *= grid_.cell_measure();
  return m;
}

double Field::max_magnitude() const noexcept {
  double m = 0.0;
  for (std::size_t c = 0; c < cell_count(); ++c) m = std::max(m, magnitude(c));
  return m;
}

bool Field::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

static void require_same_shape(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid()) || a.channels() != b.channels())
    throw LabError(ErrorCode::invalid_input, "field shapes differ");
}

Field& Field::operator+=(const Field& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

Field& Field::shift(std::span<const double> offset) {
  if (offset.size() != static_cast<std::size_t>(channels_))
    throw LabError(ErrorCode::invalid_input, "offset length does not match channels");
  for (std::size_t c = 0; c < cell_count(); ++c)
    for (int k = 0; k < channels_; ++k) (*this)(c, k) += offset[k];
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field sample_field(const TorusGrid& grid, int channels,
                   const std::function<void(std::span<const double>, std::span<double>)>& fn) {
  Field f(grid, channels);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const auto x = grid.point(c);
    fn(std::span<const double>(x.data(), grid.dim()), f.at(c));
  }
  return f;
}

double max_abs_difference(const Field& a, const Field& b) {
  require_same_shape(a, b);
  double m = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) m = std::max(m, std::abs(va[i] - vb[i]));
  return m;
}

double l2_norm(const Field& f) { return std::sqrt(integrate(f, 2.0)); }

namespace {

// |v|^p with the two common exponents evaluated without pow.
double power_of(double magnitude, double p) {
  if (p == 1.0) return magnitude;
  if (p == 2.0) return magnitude * magnitude;
  return std::pow(magnitude, p);
}

}  // namespace

double integrate(const Field& f, double p_exp, const Region& region) {
  if (!std::isfinite(p_exp)) throw LabError(ErrorCode::invalid_input, "exponent must be finite");
  double sum = 0.0;
  for (std::size_t c = 0; c < f.cell_count(); ++c) {
    if (region && !region(c)) continue;
    if (p_exp == 2.0) {
      double s = 0.0;
      for (double v : f.at(c)) s += v * v;
      sum += s;
    } else {
      sum += power_of(f.magnitude(c), p_exp);
    }
  }
  return sum * f.grid().cell_measure();
}

LevelSetStats shell_stats(std::span<const double> magnitudes, double lo, double hi, double p_exp) {
  LevelSetStats s;
  s.lambda = lo;
  std::size_t count = 0;
  for (double m : magnitudes) {
    if (m >= lo && m < hi) {
      ++count;
      s.integral_u += m;
      s.integral_up += power_of(m, p_exp);
    }
  }
  const double measure = 1.0 / static_cast<double>(magnitudes.size());
  s.measure = static_cast<double>(count) * measure;
  s.integral_u *= measure;
  s.integral_up *= measure;
  return s;
}

LevelSetStats superlevel_stats(const Field& u, double lambda, double p_exp) {
  if (!(lambda > 0.0)) throw LabError(ErrorCode::invalid_input, "lambda must be positive");
  const auto mags = u.magnitudes();
  return shell_stats(mags, lambda, kInfinity, p_exp);
}

LevelSetStats shell_stats(const Field& u, double lo, double hi, double p_exp) {
  if (!(lo > 0.0) || !(lo < hi)) throw LabError(ErrorCode::invalid_shell, "need 0 < lo < hi");
  const auto mags = u.magnitudes();
  return shell_stats(mags, lo, hi, p_exp);
}

}  // namespace aflab
