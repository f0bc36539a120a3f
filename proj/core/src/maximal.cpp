#include "aflab/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aflab/error.hpp"
#include "aflab/spectral.hpp"

namespace aflab {

double MaximalField::max() const noexcept {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

std::size_t MaximalField::count_at_least(double lambda) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [lambda](double v) { return v >= lambda; }));
}

BallStencil ball_stencil(const TorusGrid& grid) {
  const int n = grid.dim();
  const int N = grid.resolution();
  const int half = N / 2;
  struct Entry {
    int dist2;
    std::array<int, TorusGrid::kMaxDim> d;
  };
  std::vector<Entry> entries;
  entries.reserve(grid.cell_count());
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    auto idx = grid.unravel(c);
    Entry e{0, {0, 0, 0}};
    for (int j = 0; j < n; ++j) {
      const int d = grid.frequency(idx[j]);  // in {-N/2+1, ..., N/2}
      e.d[j] = d;
      e.dist2 += d * d;
    }
    entries.push_back(e);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.dist2 < b.dist2; });
  BallStencil s;
  s.offsets.reserve(entries.size());
  for (const auto& e : entries) s.offsets.push_back(e.d);
  s.ends.resize(half + 1);
  std::size_t pos = 0;
  for (int r = 0; r <= half; ++r) {
    while (pos < entries.size() && entries[pos].dist2 <= r * r) ++pos;
    s.ends[r] = pos;
  }
  return s;
}

namespace {

std::vector<double> maximal_direct(const TorusGrid& grid, std::span<const double> mags) {
  const int n = grid.dim();
  const int N = grid.resolution();
  const BallStencil stencil = ball_stencil(grid);
  const std::size_t cells = grid.cell_count();

  // Flattened offsets as per-axis strides so the inner loop is a table lookup.
  std::vector<int> wrap(3 * N);
  for (int i = 0; i < 3 * N; ++i) wrap[i] = i % N;
  std::array<std::size_t, TorusGrid::kMaxDim> stride{0, 0, 0};
  {
    std::size_t s = 1;
    for (int j = n - 1; j >= 0; --j) {
      stride[j] = s;
      s *= N;
    }
  }

  std::vector<double> out(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const auto x = grid.unravel(c);
    double sum = 0.0;
    double best = 0.0;
    std::size_t pos = 0;
    for (std::size_t r = 0; r < stencil.ends.size(); ++r) {
      const std::size_t end = stencil.ends[r];
      for (; pos < end; ++pos) {
        const auto& d = stencil.offsets[pos];
        std::size_t y = 0;
        for (int j = 0; j < n; ++j) y += stride[j] * static_cast<std::size_t>(wrap[x[j] + d[j] + N]);
        sum += mags[y];
      }
      best = std::max(best, sum / static_cast<double>(end));
    }
    out[c] = std::max(best, mags[c]);
  }
  return out;
}

std::vector<double> maximal_fft(const TorusGrid& grid, std::span<const double> mags) {
  const BallStencil stencil = ball_stencil(grid);
  const std::size_t cells = grid.cell_count();
  const Field base(grid, 1, std::vector<double>(mags.begin(), mags.end()));
  const Spectrum base_hat = forward_transform(base);

  std::vector<double> out(mags.begin(), mags.end());
  Field kernel(grid, 1);
  std::size_t pos = 0;
  for (std::size_t r = 1; r < stencil.ends.size(); ++r) {
    for (; pos < stencil.ends[r]; ++pos) {
      const auto& d = stencil.offsets[pos];
      kernel(grid.ravel({d[0], d[1], d[2]}), 0) = 1.0;
    }
    const Spectrum k_hat = forward_transform(kernel);
    Spectrum prod(grid, 1);
    const double scale = static_cast<double>(cells);  // convolution theorem with 1/N^n coefficients
    for (std::size_t k = 0; k < cells; ++k) prod.at(k)[0] = scale * base_hat.at(k)[0] * k_hat.at(k)[0];
    const Field sums = inverse_transform(prod);
    const double count = static_cast<double>(stencil.ends[r]);
    for (std::size_t c = 0; c < cells; ++c)
      out[c] = std::max(out[c], std::max(0.0, sums(c, 0)) / count);
  }
  return out;
}

}  // namespace

MaximalField maximal(const TorusGrid& grid, std::span<const double> magnitudes,
                     MaximalMethod method) {
  if (magnitudes.size() != grid.cell_count())
    throw LabError(ErrorCode::invalid_input, "magnitude array does not match grid");
  if (method == MaximalMethod::automatic)
    method = grid.cell_count() <= 4096 ? MaximalMethod::direct : MaximalMethod::fft;
  MaximalField mf;
  mf.grid = grid;
  mf.radii_max = grid.resolution() / 2;
  mf.values = method == MaximalMethod::direct ? maximal_direct(grid, magnitudes)
                                              : maximal_fft(grid, magnitudes);
  return mf;
}

MaximalField maximal(const Field& u, MaximalMethod method) {
  const auto mags = u.magnitudes();
  return maximal(u.grid(), mags, method);
}

WeakTypeReport weak_type_check(const Field& u, std::span<const double> lambdas) {
  return weak_type_check(u, maximal(u), lambdas);
}

WeakTypeReport weak_type_check(const Field& u, const MaximalField& mu,
                               std::span<const double> lambdas) {
  if (lambdas.empty()) throw LabError(ErrorCode::invalid_input, "empty lambda list");
  const auto mags = u.magnitudes();
  const double cell = u.grid().cell_measure();
  WeakTypeReport report;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw LabError(ErrorCode::invalid_input, "lambda must be positive");
    WeakTypeRow row;
    row.lambda = lambda;
    row.measure_maximal_set = static_cast<double>(mu.count_at_least(lambda)) * cell;
    row.integral_half_level = shell_stats(mags, 0.5 * lambda, kInfinity, 1.0).integral_u;
    if (row.measure_maximal_set == 0.0) {
      row.ratio = 0.0;
      row.skipped = row.integral_half_level == 0.0;
    } else if (row.integral_half_level == 0.0) {
      row.ratio = kInfinity;
      report.pass = false;
    } else {
      row.ratio = lambda * row.measure_maximal_set / row.integral_half_level;
      report.fitted_constant = std::max(report.fitted_constant, row.ratio);
    }
    report.rows.push_back(row);
  }
  return report;
}

std::vector<bool> maximal_superlevel(const MaximalField& mu, double lambda) {
  std::vector<bool> mask(mu.values.size());
  for (std::size_t c = 0; c < mask.size(); ++c) mask[c] = mu.values[c] >= lambda;
  return mask;
}

}  // namespace aflab
