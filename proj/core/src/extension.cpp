#include "aflab/extension.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "aflab/error.hpp"

namespace aflab {

std::size_t DomainMask::inside_count() const noexcept {
  return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), true));
}

DomainMask make_mask(const TorusGrid& grid, std::vector<bool> inside) {
  if (inside.size() != grid.cell_count())
    throw LabError(ErrorCode::invalid_input, "mask does not match grid");
  const auto count = std::count(inside.begin(), inside.end(), true);
  if (count == 0 || static_cast<std::size_t>(count) == inside.size())
    throw LabError(ErrorCode::invalid_input, "domain mask must be nonempty and not full");

  DomainMask mask;
  mask.grid = grid;
  mask.inside = std::move(inside);
  mask.boundary_dist.assign(grid.cell_count(), 0.0);
  const int N = grid.resolution();
  std::vector<TorusGrid::MultiIndex> outside;
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    if (!mask.inside[c]) outside.push_back(grid.unravel(c));
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!mask.inside[c]) continue;
    const auto x = grid.unravel(c);
    long best = -1;
    for (const auto& y : outside) {
      long d2 = 0;
      for (int j = 0; j < grid.dim(); ++j) {
        int d = std::abs(x[j] - y[j]);
        d = std::min(d, N - d);
        d2 += static_cast<long>(d) * d;
      }
      if (best < 0 || d2 < best) best = d2;
    }
    mask.boundary_dist[c] = (std::sqrt(static_cast<double>(best)) - 1.0) / N;
  }
  return mask;
}

DomainMask cube_mask(const TorusGrid& grid) {
  std::vector<bool> inside(grid.cell_count());
  const int half = grid.resolution() / 2;
  for (std::size_t c = 0; c < inside.size(); ++c) {
    const auto idx = grid.unravel(c);
    bool in = true;
    for (int j = 0; j < grid.dim(); ++j) in = in && idx[j] < half;
    inside[c] = in;
  }
  return make_mask(grid, std::move(inside));
}

std::vector<bool> shell_set(const DomainMask& mask, double rho, double c2) {
  if (!(rho > 0.0) || !(c2 >= 1.0))
    throw LabError(ErrorCode::invalid_input, "shell set needs rho > 0 and c2 >= 1");
  std::vector<bool> s(mask.inside.size(), false);
  for (std::size_t c = 0; c < s.size(); ++c)
    s[c] = mask.inside[c] && mask.boundary_dist[c] >= rho / c2 && mask.boundary_dist[c] <= c2 * rho;
  return s;
}

namespace {

void require_vector_field(const Field& u) {
  const int n = u.grid().dim();
  if (n < 2 || u.channels() != n)
    throw LabError(ErrorCode::incompatible_operator, "divergence needs an n-vector field, n >= 2");
}

double normalised_max(const Field& div, const Field& u, int torus_resolution) {
  double dmax = 0.0;
  for (double v : div.values()) dmax = std::max(dmax, std::abs(v));
  const double umax = u.max_magnitude();
  if (umax == 0.0) return 0.0;
  return dmax / (torus_resolution * umax);
}

Field reflect_unchecked(const Field& cube) {
  const TorusGrid& g = cube.grid();
  const int n = g.dim();
  const int Nh = g.resolution();
  const TorusGrid torus(n, 2 * Nh);
  Field out(torus, cube.channels());
  for (std::size_t y = 0; y < torus.cell_count(); ++y) {
    auto idx = torus.unravel(y);
    std::array<bool, TorusGrid::kMaxDim> flipped{false, false, false};
    for (int j = 0; j < n; ++j)
      if (idx[j] >= Nh) {
        idx[j] = 2 * Nh - 1 - idx[j];
        flipped[j] = true;
      }
    const auto src = cube.at(g.ravel(idx));
    auto dst = out.at(y);
    for (int k = 0; k < cube.channels(); ++k) {
      double sign = 1.0;
      for (int j = 0; j < n; ++j)
        if (flipped[j] && j != k) sign = -sign;
      dst[k] = sign * src[k];
    }
  }
  return out;
}

}  // namespace

Field cube_divergence(const Field& cube) {
  require_vector_field(cube);
  const TorusGrid& g = cube.grid();
  const int Nh = g.resolution();
  Field div(g, 1);
  // central difference with spacing 1/(2 Nh): (u(i+1) - u(i-1)) * Nh
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto idx = g.unravel(c);
    double s = 0.0;
    for (int j = 0; j < g.dim(); ++j) {
      const std::size_t up = idx[j] + 1 < Nh ? g.shifted(c, j, 1) : c;
      const std::size_t down = idx[j] > 0 ? g.shifted(c, j, -1) : c;
      s += (cube(up, j) - cube(down, j)) * Nh;
    }
    div(c, 0) = s;
  }
  return div;
}

double cube_divergence_residual(const Field& cube) {
  return normalised_max(cube_divergence(cube), cube, 2 * cube.grid().resolution());
}

double torus_divergence_residual(const Field& u) {
  require_vector_field(u);
  const TorusGrid& g = u.grid();
  const double half_n = 0.5 * g.resolution();
  Field div(g, 1);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    double s = 0.0;
    for (int j = 0; j < g.dim(); ++j) s += (u(g.shifted(c, j, 1), j) - u(g.shifted(c, j, -1), j)) * half_n;
    div(c, 0) = s;
  }
  return normalised_max(div, u, g.resolution());
}

Field reflect_extend_divfree(const Field& cube, double tolerance) {
  require_vector_field(cube);
  if (cube.grid().dim() > 3) throw LabError(ErrorCode::incompatible_operator, "n must be 2 or 3");
  const double res = cube_divergence_residual(cube);
  if (res > tolerance)
    throw LabError(ErrorCode::not_in_kernel,
                   "cube field is not divergence-free (residual " + std::to_string(res) + ")");
  return reflect_unchecked(cube);
}

Field zero_extend(const Field& cube) {
  const TorusGrid& g = cube.grid();
  const TorusGrid torus(g.dim(), 2 * g.resolution());
  Field out(torus, cube.channels());
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto src = cube.at(c);
    auto dst = out.at(torus.ravel(g.unravel(c)));
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

Field restrict_to_cube(const Field& torus) {
  const TorusGrid& g = torus.grid();
  const TorusGrid cube(g.dim(), g.resolution() / 2);
  Field out(cube, torus.channels());
  for (std::size_t c = 0; c < cube.cell_count(); ++c) {
    const auto src = torus.at(g.ravel(cube.unravel(c)));
    auto dst = out.at(c);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

Field random_divfree_cube_field(int n, int half_resolution, std::uint64_t seed, int band) {
  if (n < 2 || n > 3) throw LabError(ErrorCode::invalid_input, "n must be 2 or 3");
  if (band < 1 || band >= half_resolution)
    throw LabError(ErrorCode::invalid_input, "band must lie in [1, Nh)");
  const TorusGrid g(n, half_resolution);
  const double h = 0.5 / half_resolution;
  const double two_pi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  int modes = 1;
  for (int j = 0; j < n; ++j) modes *= band + 1;
  const double amp = 1.0 / std::sqrt(static_cast<double>(modes - 1));

  Field u(g, n);
  for (int m = 1; m < modes; ++m) {
    std::array<int, TorusGrid::kMaxDim> xi{0, 0, 0};
    int code = m;
    for (int j = n - 1; j >= 0; --j, code /= band + 1) xi[j] = code % (band + 1);
    std::array<double, TorusGrid::kMaxDim> c{0, 0, 0};
    std::array<double, TorusGrid::kMaxDim> sigma{0, 0, 0};
    double s2 = 0.0;
    double cs = 0.0;
    for (int j = 0; j < n; ++j) {
      c[j] = amp * normal(rng);
      sigma[j] = std::sin(two_pi * xi[j] * h) / h;
      s2 += sigma[j] * sigma[j];
      cs += c[j] * sigma[j];
    }
    if (s2 > 0.0)
      for (int j = 0; j < n; ++j) c[j] -= cs / s2 * sigma[j];
    for (std::size_t cell = 0; cell < g.cell_count(); ++cell) {
      const auto idx = g.unravel(cell);
      std::array<double, TorusGrid::kMaxDim> cosv{}, sinv{};
      for (int k = 0; k < n; ++k) {
        const double t = two_pi * xi[k] * (idx[k] + 0.5) * h;
        cosv[k] = std::cos(t);
        sinv[k] = std::sin(t);
      }
      for (int j = 0; j < n; ++j) {
        double v = c[j] * cosv[j];
        for (int k = 0; k < n; ++k)
          if (k != j) v *= sinv[k];
        u(cell, j) += v;
      }
    }
  }
  return u;
}

namespace {

bool in_lower_cube(const TorusGrid& torus, std::size_t c) {
  const auto idx = torus.unravel(c);
  for (int j = 0; j < torus.dim(); ++j)
    if (idx[j] >= torus.resolution() / 2) return false;
  return true;
}

}  // namespace

ExtensionReport verify_pointwise_maximal_bound(const Field& cube, const Field& extended) {
  const Field uz = zero_extend(cube);
  if (!(uz.grid() == extended.grid()))
    throw LabError(ErrorCode::invalid_input, "extension grid does not match the cube");
  const TorusGrid& torus = extended.grid();
  const MaximalField mu = maximal(uz);
  const MaximalField me = maximal(extended);
  const double factor = std::ldexp(1.0, torus.dim());

  ExtensionReport rep;
  rep.residual = torus_divergence_residual(extended);
  rep.agreement_error = max_abs_difference(restrict_to_cube(extended), cube);
  rep.pointwise_bound_ok = true;
  rep.c3_map.assign(torus.cell_count(), 0.0);
  for (std::size_t c = 0; c < torus.cell_count(); ++c) {
    if (!in_lower_cube(torus, c)) continue;
    const double bound = factor * mu.values[c];
    if (me.values[c] > bound + 1e-12 * std::max(1.0, bound)) rep.pointwise_bound_ok = false;
    if (mu.values[c] > 0.0) {
      const double r = me.values[c] / mu.values[c];
      rep.c3_map[c] = r;
      rep.ext2_constant = std::max(rep.ext2_constant, r);
      rep.pointwise_max_ratio = std::max(rep.pointwise_max_ratio, r / factor);
    } else if (me.values[c] > 0.0) {
      rep.ext2_fail = true;
      rep.ext2_constant = kInfinity;
    }
  }
  return rep;
}

ExtensionReport verify_ext_conditions(const Field& u_zero, const Field& extended,
                                      const DomainMask& mask, std::span<const double> lambdas) {
  if (!(u_zero.grid() == extended.grid()) || !(mask.grid == extended.grid()))
    throw LabError(ErrorCode::invalid_input, "fields and mask must share a grid");
  if (lambdas.empty()) throw LabError(ErrorCode::invalid_input, "empty lambda grid");
  const MaximalField mu = maximal(u_zero);
  const MaximalField me = maximal(extended);

  ExtensionReport rep;
  rep.residual = extended.grid().dim() >= 2 && extended.channels() == extended.grid().dim()
                     ? torus_divergence_residual(extended)
                     : 0.0;
  rep.agreement_error = 0.0;
  rep.c3_map.assign(mask.inside.size(), 0.0);
  for (std::size_t c = 0; c < mask.inside.size(); ++c) {
    if (!mask.inside[c]) continue;
    for (int ch = 0; ch < extended.channels(); ++ch)
      rep.agreement_error = std::max(rep.agreement_error, std::abs(extended(c, ch) - u_zero(c, ch)));
    if (mu.values[c] > 0.0) {
      rep.c3_map[c] = me.values[c] / mu.values[c];
      rep.ext2_constant = std::max(rep.ext2_constant, rep.c3_map[c]);
    } else if (me.values[c] > 0.0) {
      rep.ext2_fail = true;
    }
  }
  if (rep.ext2_fail) rep.ext2_constant = kInfinity;

  // (ext) as displayed: |{M(Eu) >= lambda}| <= C1 |{M(Eu) <= C2 lambda}|.
  rep.c1 = kInfinity;
  for (int k = 0; k <= 16; ++k) {
    const double c2 = std::pow(2.0, k / 4.0);
    double c1 = 0.0;
    for (double lambda : lambdas) {
      const double above = static_cast<double>(me.count_at_least(lambda));
      const double below = static_cast<double>(std::count_if(
          me.values.begin(), me.values.end(), [&](double v) { return v <= c2 * lambda; }));
      if (above == 0.0) continue;
      c1 = below > 0.0 ? std::max(c1, above / below) : kInfinity;
    }
    if (c1 < rep.c1) {
      rep.c1 = c1;
      rep.c2 = c2;
    }
  }
  rep.ext1_finite = std::isfinite(rep.c1);
  return rep;
}

CubeProjector::CubeProjector(int n, int half_resolution)
    : torus_(divergence(n).with_scheme(Scheme::central_difference), TorusGrid(n, 2 * half_resolution)) {}

Field CubeProjector::operator()(const Field& cube) const {
  return restrict_to_cube(torus_.project(reflect_unchecked(cube)));
}

MinimiserRun minimise_on_cube(const Integrand& f, const Field& init, std::span<const double> mean,
                              const MinimiseOptions& options) {
  require_vector_field(init);
  const CubeProjector project(init.grid().dim(), init.grid().resolution());
  MinimiserRun run = minimise_with(
      f, [&project](const Field& w) { return project(w); }, init, mean, options);
  run.kernel_residual = cube_divergence_residual(run.final);
  return run;
}

DomainReport domain_pipeline(const Integrand& f, const Field& cube_minimiser,
                             std::span<const double> lambdas, double eps_fraction) {
  const Field extended = reflect_extend_divfree(cube_minimiser);
  const Field uz = zero_extend(cube_minimiser);
  const TorusGrid& torus = extended.grid();
  const DomainMask mask = cube_mask(torus);
  const double p = f.spec.p;

  DomainReport rep;
  rep.extension = verify_ext_conditions(uz, extended, mask, lambdas);
  const ExtensionReport pointwise = verify_pointwise_maximal_bound(cube_minimiser, extended);
  rep.extension.pointwise_bound_ok = pointwise.pointwise_bound_ok;
  rep.extension.pointwise_max_ratio = pointwise.pointwise_max_ratio;

  const MaximalField me = maximal(extended);
  const double cell = torus.cell_measure();
  const auto mags = extended.magnitudes();
  TruncationOptions topt;
  topt.scheme = Scheme::central_difference;
  for (double lambda : lambdas) {
    DomainRow row;
    row.lambda = lambda;
    double count = 0.0;
    for (std::size_t c = 0; c < torus.cell_count(); ++c) {
      if (me.values[c] < lambda) continue;
      count += 1.0;
      if (mask.inside[c]) row.integral_omega += std::pow(mags[c], p);
    }
    row.measure_MEu = count * cell;
    row.integral_omega *= cell;
    if (torus.dim() == 2) {
      const TruncationResult t =
          lipschitz_truncate(extended, me, lambda, PotentialKind::stream2d, topt);
      row.C_A = t.linf_ratio;
      row.trivial = t.trivial;
    }
    row.chain_bound = (f.spec.nu * std::pow(row.C_A * lambda, p) + f.spec.c) * row.measure_MEu;
    // With {M(Eu) >= lambda} covering the torus there is no competitor to compare with.
    row.chain_ok = row.trivial || row.integral_omega <= row.chain_bound * (1.0 + 1e-12);
    if (row.measure_MEu > 0.0)
      row.measured_constant = row.integral_omega / (std::pow(lambda, p) * row.measure_MEu);
    rep.rows.push_back(row);
  }

  const auto cube_mags = cube_minimiser.magnitudes();
  const bool nonzero =
      std::any_of(cube_mags.begin(), cube_mags.end(), [](double v) { return v > 0.0; });
  if (nonzero && !rep.extension.ext2_fail) {
    rep.R_ext2 = std::max(1.0, 2.0 * rep.extension.ext2_constant);
    const HoleFillingRun run = run_hole_filling(cube_mags, p, rep.R_ext2, lambdas, eps_fraction);
    rep.fit_ext2 = run.fit;
    rep.holefill_ext2 = run.report;
    rep.ext2_route_ok = run.report.pass;
  }
  if (nonzero && rep.extension.ext1_finite) {
    rep.R_ext = std::max(1.0, 2.0 / rep.extension.c2);
    const HoleFillingRun run = run_hole_filling(cube_mags, p, rep.R_ext, lambdas, eps_fraction);
    rep.fit_ext = run.fit;
    rep.holefill_ext = run.report;
    rep.ext_route_ok = run.report.pass;
  }
  rep.pass = rep.extension.residual <= 1e-8 && rep.extension.agreement_error == 0.0 &&
             (rep.ext2_route_ok || rep.ext_route_ok);
  return rep;
}

}  // namespace aflab
