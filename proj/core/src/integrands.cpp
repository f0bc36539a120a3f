#include "aflab/integrands.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "aflab/error.hpp"

namespace aflab {

namespace {

double norm(std::span<const double> w) {
  double s = 0.0;
  for (double v : w) s += v * v;
  return std::sqrt(s);
}

double det2(std::span<const double> a) { return a[0] * a[3] - a[1] * a[2]; }

double det3(std::span<const double> a) {
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

// Cofactor matrix (gradient of det), row-major.
void cofactor(int n, std::span<const double> a, std::span<double> out) {
  if (n == 2) {
    out[0] = a[3];
    out[1] = -a[2];
    out[2] = -a[1];
    out[3] = a[0];
    return;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
      const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
      out[i * 3 + j] = a[i1 * 3 + j1] * a[i2 * 3 + j2] - a[i1 * 3 + j2] * a[i2 * 3 + j1];
    }
}

}  // namespace

void validate(const GrowthSpec& spec) {
  if (!(spec.p > 1.0)) throw LabError(ErrorCode::bad_integrand, "growth exponent must exceed 1");
  if (!(spec.nu >= 1.0)) throw LabError(ErrorCode::bad_integrand, "nu must be >= 1");
  if (spec.c < 0.0 || spec.alpha < 0.0 || spec.L < 0.0)
    throw LabError(ErrorCode::bad_integrand, "c, alpha and L must be nonnegative");
  if (spec.alpha > 0.0) {
    if (!spec.pi) throw LabError(ErrorCode::bad_integrand, "alpha > 0 needs a quasiaffine form");
    if (std::abs(spec.pi->degree - spec.p) > 0.0)
      throw LabError(ErrorCode::bad_integrand, "quasiaffine degree must equal p");
  }
}

Integrand power_integrand(int grid_dim, int channels, double p) {
  Integrand f;
  f.name = "power";
  f.grid_dim = grid_dim;
  f.channels = channels;
  f.value = [p](std::span<const double>, std::span<const double> w) {
    const double r = norm(w);
    return p == 2.0 ? r * r : std::pow(r, p);
  };
  f.subgradient = [p](std::span<const double>, std::span<const double> w, std::span<double> g) {
    const double r = norm(w);
    const double s = r > 0.0 ? p * std::pow(r, p - 2.0) : 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) g[i] = s * w[i];
  };
  f.spec.p = p;
  f.spec.L = p;
  return f;
}

Integrand heterogeneous_integrand(int grid_dim, int channels, double p, double nu, int bands,
                                  int axis, double b_max) {
  if (!(nu >= 1.0) || bands < 1 || axis < 0 || axis >= grid_dim || b_max < 0.0)
    throw LabError(ErrorCode::bad_integrand, "invalid heterogeneous integrand parameters");
  // Stripe membership is decided on the cell index so that quadrature never
  // straddles a jump.
  auto stiff = [bands, axis](std::span<const double> x) {
    const double t = x[axis] * bands;
    return static_cast<long>(std::floor(t + 1e-9)) % 2 == 0;
  };
  Integrand f;
  f.name = "heterogeneous";
  f.grid_dim = grid_dim;
  f.channels = channels;
  f.value = [=](std::span<const double> x, std::span<const double> w) {
    const double r = norm(w);
    const bool s = stiff(x);
    const double rp = p == 2.0 ? r * r : std::pow(r, p);
    return (s ? nu : 1.0) * rp + (s ? 0.0 : b_max) * r;
  };
  f.subgradient = [=](std::span<const double> x, std::span<const double> w, std::span<double> g) {
    const double r = norm(w);
    const bool s = stiff(x);
    double k = 0.0;
    if (r > 0.0) k = (s ? nu : 1.0) * p * std::pow(r, p - 2.0) + (s ? 0.0 : b_max) / r;
    for (std::size_t i = 0; i < w.size(); ++i) g[i] = k * w[i];
  };
  f.spec.p = p;
  f.spec.nu = nu + b_max;
  f.spec.c = b_max;
  f.spec.L = nu * p + b_max;
  return f;
}

Integrand quasiconformal_integrand(int n, double K) {
  if (n != 2 && n != 3) throw LabError(ErrorCode::bad_integrand, "quasiconformal needs n = 2 or 3");
  if (!(K >= 0.0)) throw LabError(ErrorCode::bad_integrand, "K must be nonnegative");
  Integrand f;
  f.name = "quasiconformal";
  f.grid_dim = n;
  f.channels = n * n;
  f.value = [n, K](std::span<const double>, std::span<const double> a) {
    const double r = norm(a);
    const double det = n == 2 ? det2(a) : det3(a);
    return std::max(0.0, std::pow(r, n) - K * det);
  };
  f.subgradient = [n, K](std::span<const double>, std::span<const double> a, std::span<double> g) {
    const double r = norm(a);
    const double det = n == 2 ? det2(a) : det3(a);
    if (std::pow(r, n) - K * det <= 0.0) {
      std::fill(g.begin(), g.end(), 0.0);
      return;
    }
    std::array<double, 9> cof{};
    cofactor(n, a, cof);
    const double s = n * std::pow(r, n - 2);
    for (int i = 0; i < n * n; ++i) g[i] = s * a[i] - K * cof[i];
  };
  f.spec.p = n;
  f.spec.pi = normalized_determinant(n);
  f.spec.alpha = K / f.spec.pi->scale;
  f.spec.nu = 1.0 + f.spec.alpha;
  f.spec.L = n + K * (n == 2 ? 1.0 : 1.0 / std::sqrt(3.0));
  return f;
}

Integrand plap_coupled_integrand(double p) {
  if (!(p > 1.0)) throw LabError(ErrorCode::bad_integrand, "p must exceed 1");
  const double q = p / (p - 1.0);
  Integrand f;
  f.name = "plap-coupled";
  f.grid_dim = 2;
  f.channels = 4;
  f.value = [p, q](std::span<const double>, std::span<const double> w) {
    const double e = std::hypot(w[0], w[1]);
    const double s = std::hypot(w[2], w[3]);
    return std::pow(e, p) / p + std::pow(s, q) / q - (w[0] * w[2] + w[1] * w[3]);
  };
  f.subgradient = [p, q](std::span<const double>, std::span<const double> w, std::span<double> g) {
    const double e = std::hypot(w[0], w[1]);
    const double s = std::hypot(w[2], w[3]);
    const double ke = e > 0.0 ? std::pow(e, p - 2.0) : 0.0;
    const double ks = s > 0.0 ? std::pow(s, q - 2.0) : 0.0;
    g[0] = ke * w[0] - w[2];
    g[1] = ke * w[1] - w[3];
    g[2] = ks * w[2] - w[0];
    g[3] = ks * w[3] - w[1];
  };
  // Only the Fenchel-Young lower bound f >= 0 holds; no coercive envelope is claimed.
  f.spec.p = p;
  return f;
}

Integrand with_linear_load(Integrand f, const Field& g) {
  if (g.channels() != f.channels || g.grid().dim() != f.grid_dim)
    throw LabError(ErrorCode::bad_integrand, "load field does not match integrand");
  auto cell_of = [grid = g.grid()](std::span<const double> x) {
    TorusGrid::MultiIndex idx{0, 0, 0};
    for (int j = 0; j < grid.dim(); ++j)
      idx[j] = static_cast<int>(std::lround(x[j] * grid.resolution()));
    return grid.ravel(idx);
  };
  auto base_value = f.value;
  auto base_sub = f.subgradient;
  f.name += "+load";
  f.value = [=](std::span<const double> x, std::span<const double> w) {
    const auto gx = g.at(cell_of(x));
    double s = base_value(x, w);
    for (std::size_t i = 0; i < w.size(); ++i) s += gx[i] * w[i];
    return s;
  };
  if (base_sub)
    f.subgradient = [=](std::span<const double> x, std::span<const double> w, std::span<double> out) {
      base_sub(x, w, out);
      const auto gx = g.at(cell_of(x));
      for (std::size_t i = 0; i < w.size(); ++i) out[i] += gx[i];
    };
  return f;
}

Integrand builtin_integrand(const std::string& name, int grid_dim, int channels) {
  if (name == "power") return power_integrand(grid_dim, channels, 2.0);
  if (name == "heterogeneous") return heterogeneous_integrand(grid_dim, channels, 2.0, 4.0);
  if (name == "quasiconformal") return quasiconformal_integrand(grid_dim, 2.0);
  if (name == "plap-coupled") return plap_coupled_integrand(2.0);
  throw LabError(ErrorCode::bad_integrand, "unknown integrand '" + name + "'");
}

double evaluate_I(const Integrand& f, const Field& u) {
  if (u.channels() != f.channels || u.grid().dim() != f.grid_dim)
    throw LabError(ErrorCode::bad_integrand, "field does not match integrand shape");
  const TorusGrid& grid = u.grid();
  double sum = 0.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const auto x = grid.point(c);
    const double v = f.value(std::span<const double>(x.data(), grid.dim()), u.at(c));
    if (!std::isfinite(v)) throw LabError(ErrorCode::bad_integrand, "integrand is not finite");
    sum += v;
  }
  return sum * grid.cell_measure();
}

Field subgradient_field(const Integrand& f, const Field& u) {
  if (!f.subgradient) throw LabError(ErrorCode::bad_integrand, f.name + " has no subgradient");
  const TorusGrid& grid = u.grid();
  Field g(grid, u.channels());
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const auto x = grid.point(c);
    f.subgradient(std::span<const double>(x.data(), grid.dim()), u.at(c), g.at(c));
  }
  return g;
}

namespace {

struct Sampler {
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_real_distribution<double> unit{0.0, 1.0};

  explicit Sampler(std::uint64_t seed) : rng(seed) {}

  // Uniform in the ball of the given radius.
  std::vector<double> ball(int m, double radius) {
    std::vector<double> w(m);
    double r = 0.0;
    for (double& v : w) {
      v = normal(rng);
      r += v * v;
    }
    r = std::sqrt(r);
    const double t = radius * std::pow(unit(rng), 1.0 / m) / (r > 0.0 ? r : 1.0);
    for (double& v : w) v *= t;
    return w;
  }

  std::vector<double> point(int n) {
    std::vector<double> x(n);
    for (double& v : x) v = unit(rng);
    return x;
  }
};

double continuity_ratio(const Integrand& f, std::span<const double> x, std::span<const double> w,
                        std::span<const double> w2) {
  double d = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) d += (w[i] - w2[i]) * (w[i] - w2[i]);
  d = std::sqrt(d);
  if (d == 0.0) return 0.0;
  const double p = f.spec.p;
  const double weight = 1.0 + std::pow(norm(w), p - 1.0) + std::pow(norm(w2), p - 1.0);
  return std::abs(f.value(x, w) - f.value(x, w2)) / (weight * d);
}

}  // namespace

GrowthReport check_growth(const Integrand& f, int samples, double radius, std::uint64_t seed) {
  if (samples < 1) throw LabError(ErrorCode::invalid_input, "need at least one sample");
  const GrowthSpec& s = f.spec;
  Sampler smp(seed);
  GrowthReport rep;
  rep.samples = samples;
  auto note = [&rep](const std::vector<double>& w) {
    if (rep.worst_point.empty()) rep.worst_point = w;
  };
  for (int i = 0; i < samples; ++i) {
    const auto x = smp.point(f.grid_dim);
    const auto w = smp.ball(f.channels, radius);
    // Half of the partners are close to w so the continuity bound is probed locally.
    auto w2 = smp.ball(f.channels, i % 2 == 0 ? radius : 1e-3 * radius);
    if (i % 2 == 1)
      for (std::size_t k = 0; k < w2.size(); ++k) w2[k] += w[k];

    const double v = f.value(x, w);
    const double r = std::pow(norm(w), s.p);
    const double tol = 1e-12 * (1.0 + r);
    double lower = r;
    if (s.alpha > 0.0 && s.pi) lower -= s.alpha * (*s.pi)(w);
    const double lower_slack = v - lower;
    const double upper_slack = s.nu * r + s.c - v;
    rep.min_lower_slack = std::min(rep.min_lower_slack, lower_slack);
    rep.min_upper_slack = std::min(rep.min_upper_slack, upper_slack);
    if (lower_slack < -tol) {
      ++rep.lower_violations;
      note(w);
    }
    if (upper_slack < -tol) {
      ++rep.upper_violations;
      note(w);
    }
    if (s.L > 0.0) {
      const double ratio = continuity_ratio(f, x, w, w2);
      rep.max_continuity_ratio = std::max(rep.max_continuity_ratio, ratio);
      if (ratio > s.L * (1.0 + 1e-12)) {
        ++rep.continuity_violations;
        note(w);
      }
    }
  }
  return rep;
}

double measure_continuity_constant(const Integrand& f, int samples, double radius,
                                   std::uint64_t seed) {
  Sampler smp(seed);
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const auto x = smp.point(f.grid_dim);
    const auto w = smp.ball(f.channels, radius);
    auto w2 = smp.ball(f.channels, i % 2 == 0 ? radius : 1e-3 * radius);
    if (i % 2 == 1)
      for (std::size_t k = 0; k < w2.size(); ++k) w2[k] += w[k];
    best = std::max(best, continuity_ratio(f, x, w, w2));
  }
  return best;
}

}  // namespace aflab
