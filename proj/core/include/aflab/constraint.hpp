#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aflab/spectral.hpp"
#include "aflab/torus_field.hpp"

namespace aflab {

/// How a partial derivative along one axis acts on frequency xi of an N-grid.
///   spectral            2 pi i xi      (zero on any Nyquist frequency)
///   forward_difference  N (e^{2 pi i xi / N} - 1)
///   central_difference  i N sin(2 pi xi / N)
enum class Scheme { spectral, forward_difference, central_difference };

std::string to_string(Scheme s);
/// Multiplier of d/dx_j at signed frequency xi on an N-grid (no Nyquist rule applied).
Complex derivative_multiplier(Scheme scheme, int xi, int resolution);
Scheme scheme_from_string(const std::string& s);

struct MultiIndex {
  std::array<int, TorusGrid::kMaxDim> exponents{0, 0, 0};

  int order() const noexcept { return exponents[0] + exponents[1] + exponents[2]; }
  static MultiIndex unit(int axis) {
    MultiIndex a;
    a.exponents[axis] = 1;
    return a;
  }
  bool operator==(const MultiIndex&) const = default;
};

using Frequency = std::array<int, TorusGrid::kMaxDim>;

struct SymbolMatrix {
  Frequency frequency{0, 0, 0};
  Eigen::MatrixXcd matrix;
};

/// Homogeneous constant-coefficient operator  A u = sum_{|alpha|=k} A_alpha d^alpha u
/// mapping m-channel fields on the n-torus to l-channel fields.
class DifferentialOperator {
 public:
  struct Term {
    MultiIndex alpha;
    Eigen::MatrixXd matrix;  // l x m
  };

  DifferentialOperator(int grid_dim, int source_dim, int target_dim, std::vector<Term> terms,
                       std::string name = {}, Scheme scheme = Scheme::spectral);

  int grid_dim() const noexcept { return n_; }
  int source_dim() const noexcept { return m_; }
  int target_dim() const noexcept { return l_; }
  int order() const noexcept { return k_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  const std::string& name() const noexcept { return name_; }
  Scheme scheme() const noexcept { return scheme_; }

  DifferentialOperator with_scheme(Scheme s) const;
  /// Formal adjoint with coefficients (-1)^k A_alpha^T, so <Au, phi> = <u, A* phi>.
  DifferentialOperator adjoint() const;

  /// Continuum symbol sum_alpha A_alpha (2 pi i xi)^alpha (no grid, no Nyquist rule).
  Eigen::MatrixXcd symbol(const Frequency& xi) const;
  /// Discrete symbol at storage index k of `grid`, following the scheme.
  SymbolMatrix symbol_at(const TorusGrid& grid, std::size_t k) const;

 private:
  int n_, m_, l_, k_;
  std::vector<Term> terms_;
  std::string name_;
  Scheme scheme_;
};

/// Divergence along rows: a field of `rows` x n matrices (row-major) maps to `rows` channels.
DifferentialOperator divergence(int n, int rows = 1);
/// Row-wise curl: for each row r and pair i<j, d_i w_{rj} - d_j w_{ri}.
DifferentialOperator curl(int n, int rows = 1);
/// (curl eps, div sigma) on the 2-torus acting on (eps_1, eps_2, sigma_1, sigma_2).
DifferentialOperator plap_coupled();
/// Built-ins: div2, div3, curl2, curl3, div2x2, div3x3, curl2x2, curl3x3, plap-coupled.
DifferentialOperator builtin_operator(const std::string& name);

Field apply(const DifferentialOperator& op, const Field& u);
/// ||A u||_2 / (||u||_2 + floor).
double residual_norm(const DifferentialOperator& op, const Field& u);

/// Per-frequency orthogonal projectors onto ker A[xi], cached for one grid.
class KernelProjector {
 public:
  static constexpr double kRankCutoff = 1e-10;

  KernelProjector(const DifferentialOperator& op, const TorusGrid& grid);

  const TorusGrid& grid() const noexcept { return grid_; }
  int channels() const noexcept { return m_; }
  /// Mean is preserved; every other frequency is projected.
  Field project(const Field& u) const;
  void project_in_place(Spectrum& s) const;
  /// Projects one coefficient vector at storage index k.
  void project_coefficient(std::size_t k, std::span<Complex> c) const;
  /// Largest and smallest numerical rank of A[xi] over nonzero frequencies.
  int max_rank() const noexcept { return max_rank_; }
  int min_rank() const noexcept { return min_rank_; }

 private:
  TorusGrid grid_;
  int m_;
  // P_xi = I - V_r V_r^*, stored as its range complement basis V_r (m x r).
  std::vector<Eigen::MatrixXcd> row_space_;
  int max_rank_ = 0;
  int min_rank_ = 0;
};

Field project_kernel(const DifferentialOperator& op, const Field& u);

/// Zero-mean, band-limited, discretely A-free random field. Coefficients are
/// drawn per frequency in a fixed order that does not depend on N, so the same
/// seed yields samples of the same trigonometric polynomial on every grid
/// (spectral scheme).
Field random_test_field(const DifferentialOperator& op, const TorusGrid& grid, std::uint64_t seed,
                        int band);

/// <u, v> with the normalized cell measure.
double inner_product(const Field& u, const Field& v);

struct QuasiaffineForm {
  std::string name;
  int degree = 1;
  int channels = 1;
  std::function<double(std::span<const double>)> evaluator;
  /// Factor applied to the raw polynomial so that |Pi(w)| <= |w|^degree.
  double scale = 1.0;
  /// Largest |Pi(w)| / |w|^degree seen on random samples.
  double sampled_sup_ratio = 0.0;
  bool normalization_ok = false;

  double operator()(std::span<const double> w) const { return evaluator(w); }
};

/// det of n x n matrices (row-major) scaled by n^{n/2}, the sharp Hadamard constant.
QuasiaffineForm normalized_determinant(int n, std::uint64_t seed = 7);
/// w -> w_index.
QuasiaffineForm linear_form(int channels, int index);
/// w -> |w|^2; not quasiaffine for any nontrivial operator.
QuasiaffineForm squared_norm(int channels);

/// Largest relative error of Pi(t w) = t^degree Pi(w) over random samples.
double homogeneity_defect(const QuasiaffineForm& pi, int samples, std::uint64_t seed);

struct QuasiaffineReport {
  std::vector<double> deviations;
  double max_deviation = 0.0;
  double tolerance = 1e-8;
  bool pass = false;
};

/// Compares Pi(w0) with the quadrature of Pi(w0 + psi) over random A-free psi.
QuasiaffineReport check_quasiaffine(const QuasiaffineForm& pi, const DifferentialOperator& op,
                                    std::span<const double> w0, int trials, const TorusGrid& grid,
                                    int band, std::uint64_t seed = 1, double tolerance = 1e-8);

}  // namespace aflab
