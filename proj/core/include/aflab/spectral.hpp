#pragma once

#include <complex>
#include <span>
#include <vector>

#include "aflab/torus_field.hpp"

namespace aflab {

using Complex = std::complex<double>;

/// Discrete Fourier coefficients of a field, same layout as Field
/// (frequency-major, channel-minor). Frequency index k stores xi = grid.frequency(k).
///
/// Normalization: coeff(xi) = N^{-n} sum_x u(x) exp(-2 pi i xi.x), so the
/// zero mode is the mean and synthesis is an unweighted sum.
class Spectrum {
 public:
  Spectrum(const TorusGrid& grid, int channels)
      : grid_(grid), channels_(channels), coeffs_(grid.cell_count() * channels) {}

  const TorusGrid& grid() const noexcept { return grid_; }
  int channels() const noexcept { return channels_; }

  std::span<Complex> at(std::size_t k) noexcept {
    return {coeffs_.data() + k * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<const Complex> at(std::size_t k) const noexcept {
    return {coeffs_.data() + k * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<Complex> coeffs() noexcept { return coeffs_; }
  std::span<const Complex> coeffs() const noexcept { return coeffs_; }

  /// Signed frequency vector of storage index k.
  std::array<int, TorusGrid::kMaxDim> frequency(std::size_t k) const noexcept;
  /// True when some component of the frequency equals N/2.
  bool is_nyquist(std::size_t k) const noexcept;

 private:
  TorusGrid grid_;
  int channels_;
  std::vector<Complex> coeffs_;
};

Spectrum forward_transform(const Field& u);
/// Synthesizes the real part; the imaginary residue is discarded.
Field inverse_transform(const Spectrum& s);

}  // namespace aflab
