#include "aflab/spectral.hpp"

#include <fftw3.h>

#include <mutex>

namespace aflab {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Runs an in-place multi-channel transform over the full grid.
void transform(const TorusGrid& grid, int channels, std::span<Complex> data, int sign) {
  std::array<int, TorusGrid::kMaxDim> dims{};
  for (int j = 0; j < grid.dim(); ++j) dims[j] = grid.resolution();
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_many_dft(grid.dim(), dims.data(), channels, buf, nullptr, channels, 1, buf,
                              nullptr, channels, 1, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

std::array<int, TorusGrid::kMaxDim> Spectrum::frequency(std::size_t k) const noexcept {
  auto idx = grid_.unravel(k);
  for (int j = 0; j < grid_.dim(); ++j) idx[j] = grid_.frequency(idx[j]);
  return idx;
}

bool Spectrum::is_nyquist(std::size_t k) const noexcept {
  const auto idx = grid_.unravel(k);
  for (int j = 0; j < grid_.dim(); ++j)
    if (idx[j] == grid_.resolution() / 2) return true;
  return false;
}

Spectrum forward_transform(const Field& u) {
  Spectrum s(u.grid(), u.channels());
  auto coeffs = s.coeffs();
  const auto vals = u.values();
  for (std::size_t i = 0; i < vals.size(); ++i) coeffs[i] = vals[i];
  transform(u.grid(), u.channels(), coeffs, FFTW_FORWARD);
  const double scale = u.grid().cell_measure();
  for (auto& c : coeffs) c *= scale;
  return s;
}

Field inverse_transform(const Spectrum& s) {
  std::vector<Complex> work(s.coeffs().begin(), s.coeffs().end());
  transform(s.grid(), s.channels(), work, FFTW_BACKWARD);
  std::vector<double> vals(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) vals[i] = work[i].real();
  return Field(s.grid(), s.channels(), std::move(vals));
}

}  // namespace aflab
