#include "aflab/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aflab/error.hpp"
#include "aflab/spectral.hpp"

namespace aflab {

std::string to_string(PotentialKind k) {
  return k == PotentialKind::gradient ? "gradient" : "stream2d";
}

PotentialKind potential_kind_from_string(const std::string& s) {
  if (s == "gradient") return PotentialKind::gradient;
  if (s == "stream2d" || s == "stream") return PotentialKind::stream2d;
  throw LabError(ErrorCode::invalid_input, "unknown potential kind '" + s + "'");
}

namespace {

// Number of potentials carried by a field of the given kind, validating the shape.
int potential_rows(PotentialKind kind, int n, int channels) {
  if (kind == PotentialKind::stream2d) {
    if (n != 2) throw LabError(ErrorCode::incompatible_operator, "stream2d needs a 2-grid");
    if (channels % 2 != 0)
      throw LabError(ErrorCode::incompatible_operator, "stream2d needs an even channel count");
    return channels / 2;
  }
  if (channels % n != 0)
    throw LabError(ErrorCode::incompatible_operator, "gradient field needs rows * n channels");
  return channels / n;
}

bool has_kernel_operator(PotentialKind kind, int n) {
  return kind == PotentialKind::stream2d || n >= 2;
}

// (u_2, -u_1) per row: turns a div-free field into the gradient of its stream function.
Field rotate_to_gradient(const Field& u) {
  Field g(u.grid(), u.channels());
  for (std::size_t c = 0; c < u.cell_count(); ++c)
    for (int r = 0; r < u.channels() / 2; ++r) {
      g(c, 2 * r) = u(c, 2 * r + 1);
      g(c, 2 * r + 1) = -u(c, 2 * r);
    }
  return g;
}

// Periodic Euclidean distances (physical units) looked up by wrapped offset.
class DistanceTable {
 public:
  explicit DistanceTable(const TorusGrid& grid) : grid_(grid), table_(grid.cell_count()) {
    const int N = grid.resolution();
    for (std::size_t c = 0; c < table_.size(); ++c) {
      const auto idx = grid.unravel(c);
      double s = 0.0;
      for (int j = 0; j < grid.dim(); ++j) {
        const int d = std::min(idx[j], N - idx[j]);
        s += static_cast<double>(d) * d;
      }
      table_[c] = std::sqrt(s) / N;
    }
    coords_.resize(grid.cell_count() * grid.dim());
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const auto idx = grid.unravel(c);
      for (int j = 0; j < grid.dim(); ++j) coords_[c * grid.dim() + j] = idx[j];
    }
  }

  double operator()(std::size_t a, std::size_t b) const {
    const int n = grid_.dim();
    const int N = grid_.resolution();
    std::size_t off = 0;
    for (int j = 0; j < n; ++j) {
      int d = coords_[a * n + j] - coords_[b * n + j];
      if (d < 0) d += N;
      off = off * N + static_cast<std::size_t>(d);
    }
    return table_[off];
  }

 private:
  TorusGrid grid_;
  std::vector<double> table_;
  std::vector<int> coords_;
};

}  // namespace

DifferentialOperator kernel_operator(PotentialKind kind, int n, int channels, Scheme scheme) {
  const int rows = potential_rows(kind, n, channels);
  if (kind == PotentialKind::stream2d) return divergence(2, rows).with_scheme(scheme);
  return curl(n, rows).with_scheme(scheme);
}

PotentialResult recover_potential(const Field& u, PotentialKind kind,
                                  const PotentialOptions& options) {
  const TorusGrid& grid = u.grid();
  const int n = grid.dim();
  const int N = grid.resolution();
  const int rows = potential_rows(kind, n, u.channels());
  if (!u.all_finite()) throw LabError(ErrorCode::invalid_input, "field has non-finite values");

  if (has_kernel_operator(kind, n)) {
    const double res = residual_norm(kernel_operator(kind, n, u.channels(), options.scheme), u);
    if (res > options.kernel_tolerance)
      throw LabError(ErrorCode::not_in_kernel,
                     "field is not A-free (relative residual " + std::to_string(res) + ")");
  }

  PotentialResult out;
  out.mean = u.mean();
  const double scale = std::max(1.0, u.max_magnitude());
  bool zero_mean = true;
  for (double m : out.mean) zero_mean = zero_mean && std::abs(m) <= 1e-12 * scale;
  if (!zero_mean && !options.allow_mean)
    throw LabError(ErrorCode::mean_mismatch, "field has nonzero mean; no periodic potential");

  Field w = u;
  std::vector<double> neg(out.mean.size());
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -out.mean[i];
  w.shift(neg);
  if (kind == PotentialKind::stream2d) w = rotate_to_gradient(w);

  const Spectrum g = forward_transform(w);
  Spectrum v(grid, rows);
  for (std::size_t k = 1; k < grid.cell_count(); ++k) {
    if (options.scheme == Scheme::spectral && g.is_nyquist(k)) continue;
    const auto xi = g.frequency(k);
    std::array<Complex, TorusGrid::kMaxDim> d{};
    double norm2 = 0.0;
    for (int j = 0; j < n; ++j) {
      d[j] = derivative_multiplier(options.scheme, xi[j], N);
      norm2 += std::norm(d[j]);
    }
    if (norm2 == 0.0) continue;
    const auto gk = g.at(k);
    auto vk = v.at(k);
    for (int r = 0; r < rows; ++r) {
      Complex s = 0.0;
      for (int j = 0; j < n; ++j) s += std::conj(d[j]) * gk[r * n + j];
      vk[r] = s / norm2;
    }
  }
  out.potential = inverse_transform(v);
  return out;
}

Field potential_to_field(const Field& potential, PotentialKind kind) {
  const TorusGrid& grid = potential.grid();
  const int n = grid.dim();
  const int rows = potential.channels();
  if (kind == PotentialKind::stream2d && n != 2)
    throw LabError(ErrorCode::incompatible_operator, "stream2d needs a 2-grid");
  const double N = grid.resolution();
  Field out(grid, rows * n);
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    for (int j = 0; j < n; ++j) {
      const std::size_t next = grid.shifted(c, j, 1);
      for (int r = 0; r < rows; ++r) out(c, r * n + j) = N * (potential(next, r) - potential(c, r));
    }
  if (kind == PotentialKind::stream2d)
    for (std::size_t c = 0; c < grid.cell_count(); ++c)
      for (int r = 0; r < rows; ++r) {
        const double d1 = out(c, 2 * r);
        const double d2 = out(c, 2 * r + 1);
        out(c, 2 * r) = -d2;
        out(c, 2 * r + 1) = d1;
      }
  return out;
}

double default_lipschitz_factor(int n) { return std::ldexp(1.0, n) * n; }

std::vector<bool> dilate(const TorusGrid& grid, const std::vector<bool>& mask) {
  if (mask.size() != grid.cell_count())
    throw LabError(ErrorCode::invalid_input, "mask does not match grid");
  std::vector<bool> out(mask);
  const int n = grid.dim();
  int neighbours = 1;
  for (int j = 0; j < n; ++j) neighbours *= 3;
  for (std::size_t c = 0; c < mask.size(); ++c) {
    if (!mask[c]) continue;
    for (int t = 0; t < neighbours; ++t) {
      std::size_t y = c;
      int code = t;
      for (int j = 0; j < n; ++j, code /= 3) y = grid.shifted(y, j, code % 3 - 1);
      out[y] = true;
    }
  }
  return out;
}

namespace {

void fill_change_stats(const Field& u, TruncationResult& r, const std::vector<bool>& bad_region,
                       double change_tolerance) {
  const double tol = change_tolerance * std::max(1.0, u.max_magnitude());
  const std::size_t cells = u.cell_count();
  r.bad_set.assign(cells, false);
  r.bad_cells = 0;
  r.inclusion_violations = 0;
  const auto allowed = dilate(u.grid(), bad_region);
  for (std::size_t c = 0; c < cells; ++c) {
    double diff = 0.0;
    for (int ch = 0; ch < u.channels(); ++ch)
      diff = std::max(diff, std::abs(r.truncated(c, ch) - u(c, ch)));
    if (diff > tol) {
      r.bad_set[c] = true;
      ++r.bad_cells;
      if (!allowed[c]) ++r.inclusion_violations;
    }
  }
  r.linf_ratio = r.truncated.max_magnitude() / r.lambda;
}

}  // namespace

TruncationResult lipschitz_truncate(const Field& u, double lambda, PotentialKind kind,
                                    const TruncationOptions& options) {
  return lipschitz_truncate(u, maximal(u), lambda, kind, options);
}

TruncationResult lipschitz_truncate(const Field& u, const MaximalField& mu, double lambda,
                                    PotentialKind kind, const TruncationOptions& options) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw LabError(ErrorCode::invalid_input, "lambda must be positive and finite");
  const TorusGrid& grid = u.grid();
  if (!(mu.grid == grid)) throw LabError(ErrorCode::invalid_input, "maximal field grid mismatch");
  const int n = grid.dim();
  const std::size_t cells = grid.cell_count();

  PotentialOptions popt;
  popt.scheme = options.scheme;
  popt.allow_mean = true;
  popt.kernel_tolerance = options.kernel_tolerance;
  const PotentialResult pot = recover_potential(u, kind, popt);
  const int rows = pot.potential.channels();

  const double c_l = options.lipschitz_factor > 0.0 ? options.lipschitz_factor
                                                    : default_lipschitz_factor(n);
  TruncationResult r;
  r.lambda = lambda;
  r.lipschitz_constant = c_l * lambda;
  double mean_norm = 0.0;
  for (double m : pot.mean) mean_norm += m * m;
  r.linf_bound = c_l * std::sqrt(static_cast<double>(n)) * lambda + std::sqrt(mean_norm);

  std::vector<std::size_t> good;
  std::vector<bool> in_good(cells, false);
  for (std::size_t c = 0; c < cells; ++c)
    if (mu.values[c] < lambda) {
      good.push_back(c);
      in_good[c] = true;
    }
  const auto bad_region = maximal_superlevel(mu, lambda);

  if (good.size() == cells) {
    r.truncated = u;
    fill_change_stats(u, r, bad_region, options.change_tolerance);
    return r;
  }

  // McShane envelopes restricted to G. The midpoint is K-Lipschitz and equals v
  // on G whenever v|G already is, so K is taken as the Lipschitz constant of v|G
  // itself when that stays inside the budget.
  const DistanceTable dist(grid);
  const double budget = r.lipschitz_constant / std::sqrt(static_cast<double>(rows));
  Field vt(grid, rows);
  if (good.empty()) {
    r.trivial = true;
  } else {
    for (int ch = 0; ch < rows; ++ch) {
      double lip = 0.0;
      if (options.tight_lipschitz)
        for (std::size_t a = 0; a < good.size(); ++a)
          for (std::size_t b = a + 1; b < good.size(); ++b) {
            const double dv = std::abs(pot.potential(good[a], ch) - pot.potential(good[b], ch));
            lip = std::max(lip, dv / dist(good[a], good[b]));
          }
      r.measured_lipschitz = std::max(r.measured_lipschitz, lip);
      const double K = options.tight_lipschitz ? std::min(lip, budget) : budget;
      for (std::size_t x = 0; x < cells; ++x) {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t y : good) {
          const double kd = K * dist(x, y);
          const double v = pot.potential(y, ch);
          lo = std::max(lo, v - kd);
          hi = std::min(hi, v + kd);
        }
        vt(x, ch) = 0.5 * (lo + hi);
      }
    }
  }

  std::vector<bool> agree(cells, false);
  for (std::size_t c : good) {
    bool same = true;
    for (int ch = 0; ch < rows; ++ch) same = same && vt(c, ch) == pot.potential(c, ch);
    agree[c] = same;
  }

  const Field replacement = potential_to_field(vt, kind);
  r.truncated = Field(grid, u.channels());
  for (std::size_t c = 0; c < cells; ++c) {
    bool keep = agree[c];
    for (int j = 0; j < n && keep; ++j) keep = agree[grid.shifted(c, j, 1)];
    auto dst = r.truncated.at(c);
    if (keep) {
      const auto src = u.at(c);
      std::copy(src.begin(), src.end(), dst.begin());
    } else {
      const auto src = replacement.at(c);
      for (int ch = 0; ch < u.channels(); ++ch) dst[ch] = src[ch] + pot.mean[ch];
    }
  }

  fill_change_stats(u, r, bad_region, options.change_tolerance);
  if (has_kernel_operator(kind, n)) {
    const Field a = apply(kernel_operator(kind, n, u.channels(), Scheme::forward_difference),
                          r.truncated);
    double amax = 0.0;
    for (double v : a.values()) amax = std::max(amax, std::abs(v));
    const double denom = grid.resolution() * std::max(r.truncated.max_magnitude(), 1e-300);
    r.residual = amax / denom;
    r.spectral_residual =
        residual_norm(kernel_operator(kind, n, u.channels(), Scheme::spectral), r.truncated);
  }
  return r;
}

TruncationResult naive_cut_project(const Field& u, const DifferentialOperator& op, double lambda) {
  if (!(lambda > 0.0)) throw LabError(ErrorCode::invalid_input, "lambda must be positive");
  Field cut = u;
  for (std::size_t c = 0; c < cut.cell_count(); ++c)
    if (u.magnitude(c) > lambda)
      for (double& v : cut.at(c)) v = 0.0;
  TruncationResult r;
  r.lambda = lambda;
  r.truncated = project_kernel(op, cut);
  const MaximalField mu = maximal(u);
  fill_change_stats(u, r, maximal_superlevel(mu, lambda), 1e-12);
  r.residual = residual_norm(op, r.truncated);
  r.spectral_residual = r.residual;
  return r;
}

TpReport verify_tp(const Field& u, std::span<const double> lambdas, PotentialKind kind,
                   const TruncationOptions& options, std::optional<double> budget) {
  if (lambdas.empty()) throw LabError(ErrorCode::invalid_input, "empty lambda list");
  const int n = u.grid().dim();
  const double c_l = options.lipschitz_factor > 0.0 ? options.lipschitz_factor
                                                    : default_lipschitz_factor(n);
  TpReport report;
  report.budget = budget.value_or(c_l * std::sqrt(static_cast<double>(n)));
  double mean_norm = 0.0;
  for (double m : u.mean()) mean_norm += m * m;
  mean_norm = std::sqrt(mean_norm);

  const MaximalField mu = maximal(u);
  double lo = kInfinity;
  double hi = 0.0;
  for (double lambda : lambdas) {
    const TruncationResult t = lipschitz_truncate(u, mu, lambda, kind, options);
    TpRow row;
    row.lambda = lambda;
    row.linf_ratio = t.linf_ratio;
    row.inclusion_violations = t.inclusion_violations;
    row.residual = t.residual;
    row.bad_cells = t.bad_cells;
    row.trivial = t.trivial;
    row.within_budget = t.linf_ratio <= (report.budget + mean_norm / lambda) * (1.0 + 1e-9);
    report.pass = report.pass && row.within_budget && row.inclusion_violations == 0 &&
                  row.residual <= 1e-8;
    report.max_linf_ratio = std::max(report.max_linf_ratio, row.linf_ratio);
    if (row.bad_cells > 0 && !row.trivial) {
      lo = std::min(lo, row.linf_ratio);
      hi = std::max(hi, row.linf_ratio);
    }
    report.rows.push_back(row);
  }
  report.linf_spread = (hi > 0.0 && lo < kInfinity && lo > 0.0) ? hi / lo : 1.0;
  return report;
}

}  // namespace aflab
