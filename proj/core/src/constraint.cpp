#include "aflab/constraint.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <random>

#include "aflab/error.hpp"

namespace aflab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

Complex derivative_multiplier(Scheme scheme, int xi, int resolution) {
  switch (scheme) {
    case Scheme::spectral:
      return {0.0, kTwoPi * xi};
    case Scheme::forward_difference: {
      const double t = kTwoPi * xi / resolution;
      return static_cast<double>(resolution) * Complex(std::cos(t) - 1.0, std::sin(t));
    }
    case Scheme::central_difference:
      return {0.0, resolution * std::sin(kTwoPi * xi / resolution)};
  }
  return {};
}

namespace {

Complex monomial(const MultiIndex& alpha, const std::array<Complex, TorusGrid::kMaxDim>& d, int n) {
  Complex v = 1.0;
  for (int j = 0; j < n; ++j)
    for (int e = 0; e < alpha.exponents[j]; ++e) v *= d[j];
  return v;
}

// Orthonormal basis of the row space of `a` (columns of V with sigma above cutoff).
Eigen::MatrixXcd row_space_basis(const Eigen::MatrixXcd& a) {
  if (a.size() == 0) return Eigen::MatrixXcd(a.cols(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  if (smax > 0.0)
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > KernelProjector::kRankCutoff * smax) ++rank;
  return svd.matrixV().leftCols(rank);
}

void remove_row_space(const Eigen::MatrixXcd& basis, std::span<Complex> c) {
  if (basis.cols() == 0) return;
  Eigen::Map<Eigen::VectorXcd> v(c.data(), static_cast<Eigen::Index>(c.size()));
  const Eigen::VectorXcd coeff = basis.adjoint() * v;
  v -= basis * coeff;
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::spectral: return "spectral";
    case Scheme::forward_difference: return "forward";
    case Scheme::central_difference: return "central";
  }
  return "spectral";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "spectral") return Scheme::spectral;
  if (s == "forward" || s == "forward_difference") return Scheme::forward_difference;
  if (s == "central" || s == "central_difference") return Scheme::central_difference;
  throw LabError(ErrorCode::invalid_input, "unknown derivative scheme '" + s + "'");
}

DifferentialOperator::DifferentialOperator(int grid_dim, int source_dim, int target_dim,
                                           std::vector<Term> terms, std::string name, Scheme scheme)
    : n_(grid_dim), m_(source_dim), l_(target_dim), k_(0), terms_(std::move(terms)),
      name_(std::move(name)), scheme_(scheme) {
  if (n_ < 1 || n_ > TorusGrid::kMaxDim || m_ < 1 || l_ < 1)
    throw LabError(ErrorCode::incompatible_operator, "operator dimensions out of range");
  if (terms_.empty()) throw LabError(ErrorCode::incompatible_operator, "operator has no terms");
  k_ = terms_.front().alpha.order();
  if (k_ < 1) throw LabError(ErrorCode::incompatible_operator, "operator order must be >= 1");
  bool nonzero = false;
  for (const auto& t : terms_) {
    if (t.alpha.order() != k_)
      throw LabError(ErrorCode::incompatible_operator, "operator is not homogeneous");
    for (int j = n_; j < TorusGrid::kMaxDim; ++j)
      if (t.alpha.exponents[j] != 0)
        throw LabError(ErrorCode::incompatible_operator, "multi-index exceeds grid dimension");
    if (t.matrix.rows() != l_ || t.matrix.cols() != m_)
      throw LabError(ErrorCode::incompatible_operator, "coefficient matrix has wrong shape");
    nonzero = nonzero || t.matrix.cwiseAbs().maxCoeff() > 0.0;
  }
  if (!nonzero) throw LabError(ErrorCode::incompatible_operator, "all coefficients vanish");
}

DifferentialOperator DifferentialOperator::with_scheme(Scheme s) const {
  DifferentialOperator copy = *this;
  copy.scheme_ = s;
  return copy;
}

DifferentialOperator DifferentialOperator::adjoint() const {
  std::vector<Term> t;
  const double sign = (k_ % 2 == 0) ? 1.0 : -1.0;
  for (const auto& term : terms_) t.push_back({term.alpha, sign * term.matrix.transpose()});
  return DifferentialOperator(n_, l_, m_, std::move(t), name_ + "*", scheme_);
}

Eigen::MatrixXcd DifferentialOperator::symbol(const Frequency& xi) const {
  std::array<Complex, TorusGrid::kMaxDim> d{};
  for (int j = 0; j < n_; ++j) d[j] = Complex(0.0, kTwoPi * xi[j]);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(l_, m_);
  for (const auto& t : terms_) a += monomial(t.alpha, d, n_) * t.matrix.cast<Complex>();
  return a;
}

SymbolMatrix DifferentialOperator::symbol_at(const TorusGrid& grid, std::size_t k) const {
  if (grid.dim() != n_)
    throw LabError(ErrorCode::incompatible_operator, "grid dimension does not match operator");
  SymbolMatrix out;
  auto idx = grid.unravel(k);
  bool nyquist = false;
  for (int j = 0; j < n_; ++j) {
    nyquist = nyquist || idx[j] == grid.resolution() / 2;
    out.frequency[j] = grid.frequency(idx[j]);
  }
  out.matrix = Eigen::MatrixXcd::Zero(l_, m_);
  if (scheme_ == Scheme::spectral && nyquist) return out;
  std::array<Complex, TorusGrid::kMaxDim> d{};
  for (int j = 0; j < n_; ++j) d[j] = derivative_multiplier(scheme_, out.frequency[j], grid.resolution());
  for (const auto& t : terms_) out.matrix += monomial(t.alpha, d, n_) * t.matrix.cast<Complex>();
  return out;
}

DifferentialOperator divergence(int n, int rows) {
  const int m = rows * n;
  std::vector<DifferentialOperator::Term> terms;
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, m);
    for (int r = 0; r < rows; ++r) a(r, r * n + j) = 1.0;
    terms.push_back({MultiIndex::unit(j), a});
  }
  std::string name = "div" + std::to_string(n);
  if (rows > 1) name += "x" + std::to_string(rows);
  return DifferentialOperator(n, m, rows, std::move(terms), name);
}

DifferentialOperator curl(int n, int rows) {
  if (n < 2) throw LabError(ErrorCode::incompatible_operator, "curl needs n >= 2");
  const int m = rows * n;
  const int pairs = n * (n - 1) / 2;
  const int l = rows * pairs;
  std::vector<Eigen::MatrixXd> coeff(n, Eigen::MatrixXd::Zero(l, m));
  for (int r = 0; r < rows; ++r) {
    int p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++p) {
        coeff[i](r * pairs + p, r * n + j) += 1.0;
        coeff[j](r * pairs + p, r * n + i) -= 1.0;
      }
  }
  std::vector<DifferentialOperator::Term> terms;
  for (int j = 0; j < n; ++j) terms.push_back({MultiIndex::unit(j), coeff[j]});
  std::string name = "curl" + std::to_string(n);
  if (rows > 1) name += "x" + std::to_string(rows);
  return DifferentialOperator(n, m, l, std::move(terms), name);
}

DifferentialOperator plap_coupled() {
  Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(2, 4);
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(2, 4);
  // row 0: curl eps = d1 eps_2 - d2 eps_1 ; row 1: div sigma = d1 sigma_1 + d2 sigma_2
  d1(0, 1) = 1.0;
  d2(0, 0) = -1.0;
  d1(1, 2) = 1.0;
  d2(1, 3) = 1.0;
  return DifferentialOperator(2, 4, 2, {{MultiIndex::unit(0), d1}, {MultiIndex::unit(1), d2}},
                              "plap-coupled");
}

DifferentialOperator builtin_operator(const std::string& name) {
  if (name == "div2") return divergence(2);
  if (name == "div3") return divergence(3);
  if (name == "curl2") return curl(2);
  if (name == "curl3") return curl(3);
  if (name == "div2x2") return divergence(2, 2);
  if (name == "div3x3") return divergence(3, 3);
  if (name == "curl2x2") return curl(2, 2);
  if (name == "curl3x3") return curl(3, 3);
  if (name == "plap-coupled") return plap_coupled();
  throw LabError(ErrorCode::invalid_input, "unknown built-in operator '" + name + "'");
}

Field apply(const DifferentialOperator& op, const Field& u) {
  if (u.channels() != op.source_dim() || u.grid().dim() != op.grid_dim())
    throw LabError(ErrorCode::incompatible_operator,
                   "field has " + std::to_string(u.channels()) + " channels on a " +
                       std::to_string(u.grid().dim()) + "-torus; operator expects " +
                       std::to_string(op.source_dim()) + " on a " +
                       std::to_string(op.grid_dim()) + "-torus");
  const Spectrum in = forward_transform(u);
  Spectrum out(u.grid(), op.target_dim());
  for (std::size_t k = 0; k < u.cell_count(); ++k) {
    const auto sym = op.symbol_at(u.grid(), k);
    const auto src = in.at(k);
    Eigen::Map<const Eigen::VectorXcd> v(src.data(), op.source_dim());
    auto dst = out.at(k);
    Eigen::Map<Eigen::VectorXcd> w(dst.data(), op.target_dim());
    w = sym.matrix * v;
  }
  return inverse_transform(out);
}

double residual_norm(const DifferentialOperator& op, const Field& u) {
  constexpr double kFloor = 1e-300;
  return l2_norm(apply(op, u)) / (l2_norm(u) + kFloor);
}

KernelProjector::KernelProjector(const DifferentialOperator& op, const TorusGrid& grid)
    : grid_(grid), m_(op.source_dim()), row_space_(grid.cell_count()) {
  if (grid.dim() != op.grid_dim())
    throw LabError(ErrorCode::incompatible_operator, "grid dimension does not match operator");
  max_rank_ = 0;
  min_rank_ = m_;
  for (std::size_t k = 1; k < grid.cell_count(); ++k) {
    row_space_[k] = row_space_basis(op.symbol_at(grid, k).matrix);
    const int r = static_cast<int>(row_space_[k].cols());
    max_rank_ = std::max(max_rank_, r);
    min_rank_ = std::min(min_rank_, r);
  }
  row_space_[0] = Eigen::MatrixXcd(m_, 0);
}

void KernelProjector::project_coefficient(std::size_t k, std::span<Complex> c) const {
  remove_row_space(row_space_[k], c);
}

void KernelProjector::project_in_place(Spectrum& s) const {
  for (std::size_t k = 1; k < s.grid().cell_count(); ++k) remove_row_space(row_space_[k], s.at(k));
}

Field KernelProjector::project(const Field& u) const {
  if (!(u.grid() == grid_) || u.channels() != m_)
    throw LabError(ErrorCode::incompatible_operator, "field does not match projector");
  Spectrum s = forward_transform(u);
  project_in_place(s);
  return inverse_transform(s);
}

Field project_kernel(const DifferentialOperator& op, const Field& u) {
  if (u.channels() != op.source_dim())
    throw LabError(ErrorCode::incompatible_operator, "channel count does not match operator");
  return KernelProjector(op, u.grid()).project(u);
}

Field random_test_field(const DifferentialOperator& op, const TorusGrid& grid, std::uint64_t seed,
                        int band) {
  if (band < 0 || 2 * band >= grid.resolution())
    throw LabError(ErrorCode::invalid_input, "band must satisfy 0 <= band < N/2");
  const int n = grid.dim();
  const int m = op.source_dim();
  Spectrum s(grid, m);
  if (band == 0) return inverse_transform(s);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int side = 2 * band + 1;
  int total = 1;
  for (int j = 0; j < n; ++j) total *= side;
  const double amplitude = 1.0 / std::sqrt(static_cast<double>((total - 1) / 2));

  std::vector<Complex> c(m);
  for (int flat = 0; flat < total; ++flat) {
    TorusGrid::MultiIndex xi{0, 0, 0};
    int rest = flat;
    for (int j = n - 1; j >= 0; --j) {
      xi[j] = rest % side - band;
      rest /= side;
    }
    // Keep one representative of each +/- xi pair: first nonzero component positive.
    int lead = 0;
    for (int j = 0; j < n && lead == 0; ++j) lead = xi[j];
    if (lead <= 0) continue;
    for (auto& z : c) {
      const double re = normal(rng);
      const double im = normal(rng);
      z = amplitude * Complex(re, im) / std::numbers::sqrt2;
    }
    const std::size_t k = grid.ravel(xi);
    remove_row_space(row_space_basis(op.symbol_at(grid, k).matrix), c);
    TorusGrid::MultiIndex neg{-xi[0], -xi[1], -xi[2]};
    const std::size_t kneg = grid.ravel(neg);
    auto pos = s.at(k);
    auto opp = s.at(kneg);
    for (int ch = 0; ch < m; ++ch) {
      pos[ch] = c[ch];
      opp[ch] = std::conj(c[ch]);
    }
  }
  return inverse_transform(s);
}

double inner_product(const Field& u, const Field& v) {
  if (!(u.grid() == v.grid()) || u.channels() != v.channels())
    throw LabError(ErrorCode::invalid_input, "inner product of differently shaped fields");
  double s = 0.0;
  const auto a = u.values();
  const auto b = v.values();
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * u.grid().cell_measure();
}

namespace {

double euclid(std::span<const double> w) {
  double s = 0.0;
  for (double v : w) s += v * v;
  return std::sqrt(s);
}

double raw_determinant(int n, std::span<const double> w) {
  if (n == 1) return w[0];
  if (n == 2) return w[0] * w[3] - w[1] * w[2];
  return w[0] * (w[4] * w[8] - w[5] * w[7]) - w[1] * (w[3] * w[8] - w[5] * w[6]) +
         w[2] * (w[3] * w[7] - w[4] * w[6]);
}

void measure_normalization(QuasiaffineForm& pi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(pi.channels);
  double sup = 0.0;
  for (int s = 0; s < 4000; ++s) {
    for (double& v : w) v = normal(rng);
    const double r = euclid(w);
    if (r == 0.0) continue;
    sup = std::max(sup, std::abs(pi(w)) / std::pow(r, pi.degree));
  }
  pi.sampled_sup_ratio = sup;
  pi.normalization_ok = sup <= 1.0 + 1e-12;
}

}  // namespace

QuasiaffineForm normalized_determinant(int n, std::uint64_t seed) {
  if (n < 1 || n > 3) throw LabError(ErrorCode::invalid_input, "determinant supports n = 1..3");
  QuasiaffineForm pi;
  pi.name = "det" + std::to_string(n);
  pi.degree = n;
  pi.channels = n * n;
  pi.scale = std::pow(static_cast<double>(n), 0.5 * n);
  const double scale = pi.scale;
  pi.evaluator = [n, scale](std::span<const double> w) { return scale * raw_determinant(n, w); };
  measure_normalization(pi, seed);
  return pi;
}

QuasiaffineForm linear_form(int channels, int index) {
  QuasiaffineForm pi;
  pi.name = "linear" + std::to_string(index);
  pi.degree = 1;
  pi.channels = channels;
  pi.evaluator = [index](std::span<const double> w) { return w[index]; };
  measure_normalization(pi, 11);
  return pi;
}

QuasiaffineForm squared_norm(int channels) {
  QuasiaffineForm pi;
  pi.name = "norm2";
  pi.degree = 2;
  pi.channels = channels;
  pi.evaluator = [](std::span<const double> w) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return s;
  };
  measure_normalization(pi, 13);
  return pi;
}

double homogeneity_defect(const QuasiaffineForm& pi, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  std::vector<double> w(pi.channels), tw(pi.channels);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (double& v : w) v = normal(rng);
    const double t = scale(rng);
    for (int i = 0; i < pi.channels; ++i) tw[i] = t * w[i];
    const double expected = std::pow(t, pi.degree) * pi(w);
    const double denom = std::pow(std::abs(t) * euclid(w), pi.degree) + 1e-300;
    worst = std::max(worst, std::abs(pi(tw) - expected) / denom);
  }
  return worst;
}

QuasiaffineReport check_quasiaffine(const QuasiaffineForm& pi, const DifferentialOperator& op,
                                    std::span<const double> w0, int trials, const TorusGrid& grid,
                                    int band, std::uint64_t seed, double tolerance) {
  if (static_cast<int>(w0.size()) != op.source_dim() || pi.channels != op.source_dim())
    throw LabError(ErrorCode::incompatible_operator, "form, operator and w0 disagree on m");
  if (band * pi.degree >= grid.resolution() / 2)
    throw LabError(ErrorCode::aliasing_risk,
                   "band * degree must stay below N/2 for exact quadrature");
  QuasiaffineReport report;
  report.tolerance = tolerance;
  const double target = pi(w0);
  std::vector<double> w(w0.size());
  for (int t = 0; t < trials; ++t) {
    const Field psi = random_test_field(op, grid, seed + static_cast<std::uint64_t>(t), band);
    double sum = 0.0;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const auto p = psi.at(c);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = w0[i] + p[i];
      sum += pi(w);
    }
    const double dev = std::abs(target - sum * grid.cell_measure());
    report.deviations.push_back(dev);
    report.max_deviation = std::max(report.max_deviation, dev);
  }
  report.pass = report.max_deviation <= tolerance;
  return report;
}

}  // namespace aflab
