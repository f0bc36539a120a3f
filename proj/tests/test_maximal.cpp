#include <cmath>
#include <random>

#include "aflab/constraint.hpp"
#include "aflab/error.hpp"
#include "aflab/maximal.hpp"
#include "doctest.h"

using namespace aflab;

namespace {

int periodic_offset(int a, int b, int N) {
  int d = std::abs(a - b) % N;
  return std::min(d, N - d);
}

// Brute force: every radius, every cell, distances recomputed from scratch.
std::vector<double> brute_maximal(const Field& u) {
  const TorusGrid& g = u.grid();
  const int N = g.resolution();
  std::vector<double> out(g.cell_count(), 0.0);
  for (std::size_t x = 0; x < g.cell_count(); ++x) {
    const auto ix = g.unravel(x);
    for (int r = 0; r <= N / 2; ++r) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t y = 0; y < g.cell_count(); ++y) {
        const auto iy = g.unravel(y);
        int d2 = 0;
        for (int j = 0; j < g.dim(); ++j) {
          const int d = periodic_offset(ix[j], iy[j], N);
          d2 += d * d;
        }
        if (d2 <= r * r) {
          sum += u.magnitude(y);
          ++count;
        }
      }
      out[x] = std::max(out[x], sum / count);
    }
  }
  return out;
}

Field random_field(const TorusGrid& g, int channels, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Field u(g, channels);
  for (double& v : u.values()) v = d(rng);
  return u;
}

}  // namespace

TEST_CASE("spike on an 8-cell circle") {
  Field u(TorusGrid(1, 8), 1);
  u(0, 0) = 8.0;
  const MaximalField mu = maximal(u);
  CHECK(mu.values[0] == 8.0);
  CHECK(mu.values[1] == 8.0 / 3.0);
  CHECK(mu.values[7] == 8.0 / 3.0);
  const auto oracle = brute_maximal(u);
  for (std::size_t c = 0; c < 8; ++c) CHECK(mu.values[c] == oracle[c]);
}

TEST_CASE("constant field") {
  const TorusGrid g(2, 8);
  Field u(g, 2);
  const std::vector<double> w{0.6, 0.8};
  u.shift(w);
  for (double v : maximal(u).values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("direct evaluation matches brute force in 2D") {
  const Field u = random_field(TorusGrid(2, 8), 2, 11);
  const MaximalField mu = maximal(u, MaximalMethod::direct);
  const auto oracle = brute_maximal(u);
  for (std::size_t c = 0; c < oracle.size(); ++c)
    CHECK(std::abs(mu.values[c] - oracle[c]) <= 1e-12);
  CHECK(mu.radii_max == 4);
}

TEST_CASE("FFT ball sums agree with direct sums") {
  const Field u = random_field(TorusGrid(2, 16), 1, 5);
  const MaximalField direct = maximal(u, MaximalMethod::direct);
  const MaximalField fft = maximal(u, MaximalMethod::fft);
  for (std::size_t c = 0; c < direct.values.size(); ++c)
    CHECK(std::abs(direct.values[c] - fft.values[c]) <= 1e-10);
}

TEST_CASE("ball stencil counts") {
  const TorusGrid g(2, 10);
  const BallStencil s = ball_stencil(g);
  CHECK(s.offsets.size() == g.cell_count());
  for (int r = 0; r <= 5; ++r) {
    std::size_t count = 0;
    for (int a = -4; a <= 5; ++a)
      for (int b = -4; b <= 5; ++b) count += a * a + b * b <= r * r;
    CHECK(s.ends[r] == count);
  }
}

TEST_CASE("structural properties") {
  const TorusGrid g(2, 8);
  const Field u = random_field(g, 2, 1);
  const Field v = random_field(g, 2, 2);
  const MaximalField mu = maximal(u);
  const MaximalField mv = maximal(v);
  const MaximalField muv = maximal(u + v);
  const MaximalField m2 = maximal(2.0 * u);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    CHECK(mu.values[c] >= u.magnitude(c));
    CHECK(muv.values[c] <= (mu.values[c] + mv.values[c]) * (1.0 + 1e-12));
    CHECK(m2.values[c] == 2.0 * mu.values[c]);
  }
  for (double lambda : {0.3, 0.7, 1.1}) {
    const auto big = maximal_superlevel(mu, lambda);
    for (std::size_t c = 0; c < g.cell_count(); ++c)
      if (u.magnitude(c) >= lambda) CHECK(big[c]);
  }
}

TEST_CASE("weak-type ratios") {
  const TorusGrid g(2, 8);
  Field one(g, 1);
  const std::vector<double> w{1.0};
  one.shift(w);
  const std::vector<double> half{0.5};
  const auto r = weak_type_check(one, half);
  CHECK(r.rows[0].ratio == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.pass);

  Field bump(g, 1);
  bump(0, 0) = 1.0;
  const std::vector<double> high{10.0};
  const auto s = weak_type_check(bump, high);
  CHECK(s.rows[0].skipped);
  CHECK(s.fitted_constant == 0.0);

  const Field u = random_test_field(curl(2), TorusGrid(2, 16), 3, 4);
  const MaximalField mu = maximal(u);
  std::vector<double> lambdas;
  for (int i = 0; i < 20; ++i) lambdas.push_back(mu.max() * (0.1 + 0.9 * i / 19.0));
  const auto rep = weak_type_check(u, mu, lambdas);
  CHECK(rep.pass);
  for (const auto& row : rep.rows) CHECK(std::isfinite(row.ratio));
  CHECK_THROWS_AS(weak_type_check(u, mu, std::vector<double>{}), LabError);
}
