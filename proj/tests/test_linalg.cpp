#include "doctest.h"

#include <cmath>
#include <random>

#include "kernspec/errors.hpp"
#include "kernspec/linalg.hpp"
#include "oracles.hpp"

using namespace kernspec::linalg;

namespace {

SymMatrix random_sym(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j, nd(rng));
  return m;
}

oracle::Dense dense(const SymMatrix& m) {
  oracle::Dense a(m.order(), std::vector<double>(m.order()));
  for (std::size_t i = 0; i < m.order(); ++i)
    for (std::size_t j = 0; j < m.order(); ++j) a[i][j] = m(i, j);
  return a;
}

}  // namespace

TEST_CASE("eig_sym small cases") {
  SymMatrix m(2);
  m.set(0, 0, 2);
  m.set(1, 1, 2);
  m.set(1, 0, 1);
  const auto e = eig_sym(m);
  CHECK(e.spectrum.values[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(e.spectrum.values[1] == doctest::Approx(1.0).epsilon(1e-14));

  const auto id = eigenvalues(SymMatrix::identity(5));
  for (double v : id.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

  SymMatrix bad(2);
  bad.set(1, 0, std::nan(""));
  CHECK_THROWS_AS(eig_sym(bad), kernspec::NumericalError);
}

TEST_CASE("eig_sym residuals, orthonormality, reconstruction and trace") {
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 2u, 7u, 30u, 120u}) {
    const SymMatrix m = random_sym(n, rng);
    const auto e = eig_sym(m);
    const double norm = std::abs(e.spectrum.values.front());
    double worst_res = 0.0, worst_orth = 0.0, worst_rec = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double r2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += m(i, j) * e.vectors(j, k);
        s -= e.spectrum.values[k] * e.vectors(i, k);
        r2 += s * s;
      }
      worst_res = std::max(worst_res, std::sqrt(r2));
      for (std::size_t l = 0; l < n; ++l) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += e.vectors(i, k) * e.vectors(i, l);
        worst_orth = std::max(worst_orth, std::abs(dot - (k == l ? 1.0 : 0.0)));
      }
    }
    SymMatrix rec(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += e.vectors(i, k) * e.spectrum.values[k] * e.vectors(j, k);
        rec.set(i, j, s);
      }
    worst_rec = op_norm(rec - m);
    CHECK(worst_res <= 1e-10 * norm * std::sqrt(static_cast<double>(n)));
    CHECK(worst_orth <= 1e-10);
    CHECK(worst_rec <= 1e-9 * (1.0 + norm));
    double sum = 0.0;
    for (double v : e.spectrum.values) sum += v;
    CHECK(sum == doctest::Approx(m.trace()).epsilon(1e-10).scale(norm));
  }
}

TEST_CASE("eigenvalues against the cyclic Jacobi oracle") {
  std::mt19937_64 rng(17);
  for (int draw = 0; draw < 20; ++draw) {
    const std::size_t n = 5 + static_cast<std::size_t>(draw) * 2;
    const SymMatrix m = random_sym(n, rng);
    const auto ref = oracle::jacobi_eigenvalues(dense(m));
    const auto got = eigenvalues(m);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(got.values[k] - ref[k]) <= 1e-9);
  }
}

TEST_CASE("top_eigenvalues matches the full solver") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;
  for (std::size_t n : {40u, 150u, 300u}) {
    SymMatrix m = random_sym(n, rng);
    const auto full = eigenvalues(m);
    const auto top = top_eigenvalues(m, 7);
    REQUIRE(top.size() == 7);
    for (std::size_t k = 0; k < 7; ++k) CHECK(std::abs(top.values[k] - full.values[k]) <= 1e-9);
  }
  // rank three: the remaining values are zeros
  const std::size_t n = 200;
  std::vector<std::vector<double>> u(3, std::vector<double>(n));
  for (auto& v : u)
    for (double& x : v) x = nd(rng);
  SymMatrix low(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) low.set(i, j, 3 * u[0][i] * u[0][j] - 2 * u[1][i] * u[1][j] + u[2][i] * u[2][j]);
  const auto full = eigenvalues(low);
  const auto top = top_eigenvalues(low, 6);
  for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(top.values[k] - full.values[k]) <= 1e-9 * std::abs(full.values[0]));
  // constant matrix
  SymMatrix ones(n, 0.3 / n);
  const auto c = top_eigenvalues(ones, 3);
  CHECK(c.values[0] == doctest::Approx(0.3).epsilon(1e-13));
  CHECK(std::abs(c.values[1]) <= 1e-14);
}

TEST_CASE("op_norm") {
  CHECK(op_norm(SymMatrix::diagonal(std::vector<double>{3, -5, 1})) == 5.0);
  CHECK(op_norm(SymMatrix(4)) == 0.0);
  std::mt19937_64 rng(29);
  for (int draw = 0; draw < 5; ++draw) {
    const SymMatrix m = random_sym(20, rng);
    CHECK(op_norm(m) == doctest::Approx(oracle::power_iteration_norm(dense(m))).epsilon(1e-8));
  }
}

TEST_CASE("sort_by_magnitude ordering and ties") {
  const std::vector<double> v{-2.0, 1.0, 2.0, -0.5};
  const Spectrum s = sort_by_magnitude(v);
  CHECK(s.values == std::vector<double>{2.0, -2.0, 1.0, -0.5});
  CHECK(s.order == std::vector<std::size_t>{1, 2, 0, 3});
}

TEST_CASE("delta2 by sorting equals the exhaustive oracle") {
  CHECK(delta2(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK(delta2(std::vector<double>{3, -1}, std::vector<double>{-1, 3}) == 0.0);
  const std::vector<double> a{2, 1, -1}, b{1.5, 0, 0};
  CHECK(delta2(a, b) == doctest::Approx(oracle::brute_delta2(a, b)).epsilon(1e-14));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_int_distribution<int> len(0, 6);
  for (int draw = 0; draw < 200; ++draw) {
    std::vector<double> x(len(rng)), y(len(rng));
    for (double& t : x) t = u(rng);
    for (double& t : y) t = u(rng);
    CHECK(std::abs(delta2(x, y) - oracle::brute_delta2(x, y)) <= 1e-12);
  }
}

TEST_CASE("delta2 triangle inequality and per-index domination") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-2, 2);
  std::uniform_int_distribution<int> len(1, 8);
  for (int draw = 0; draw < 200; ++draw) {
    std::vector<double> x(len(rng)), y(len(rng)), z(len(rng));
    for (double& t : x) t = u(rng);
    for (double& t : y) t = u(rng);
    for (double& t : z) t = u(rng);
    CHECK(delta2(x, z) <= delta2(x, y) + delta2(y, z) + 1e-12);
  }
  for (int draw = 0; draw < 100; ++draw) {
    const SymMatrix a = random_sym(6, rng), b = random_sym(6, rng);
    auto ea = eigenvalues(a).values, eb = eigenvalues(b).values;
    const double d2 = delta2(ea, eb);
    std::sort(ea.begin(), ea.end());
    std::sort(eb.begin(), eb.end());
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(ea[i] - eb[i]) <= d2 + 1e-12);
  }
}

TEST_CASE("Ostrowski multiplicative check") {
  // orthonormal columns: zero gap
  Matrix s(4, 2);
  s(0, 0) = 1;
  s(2, 1) = 1;
  const auto exact = ostrowski_gap(s, std::vector<double>{2.0, -1.0});
  CHECK(exact.max_gap <= 1e-14);
  CHECK(exact.holds);
  const auto zero = ostrowski_gap(s, std::vector<double>{0.0, 0.0});
  CHECK(zero.max_gap == 0.0);
  CHECK(zero.bound == 0.0);

  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> nn(2, 12);
  int violations = 0;
  for (int draw = 0; draw < 500; ++draw) {
    const std::size_t n = static_cast<std::size_t>(nn(rng));
    const std::size_t r = std::min<std::size_t>(n, 1 + draw % 6);
    Matrix m(n, r);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < r; ++j) m(i, j) = (i == j ? 1.0 : 0.0) + 0.3 * nd(rng);
    std::vector<double> lam(r);
    for (double& x : lam) x = nd(rng);
    if (!ostrowski_gap(m, lam).holds) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("Weyl additive check") {
  std::mt19937_64 rng(43);
  const SymMatrix a = random_sym(5, rng);
  CHECK(weyl_gap(a, a).max_gap == 0.0);
  const double eps = 1e-3;
  const auto shifted = weyl_gap(a, a + SymMatrix::diagonal(std::vector<double>(5, eps)));
  CHECK(shifted.max_gap == doctest::Approx(eps).epsilon(1e-9));
  std::uniform_int_distribution<int> nn(1, 12);
  int violations = 0;
  for (int draw = 0; draw < 500; ++draw) {
    const std::size_t n = static_cast<std::size_t>(nn(rng));
    if (!weyl_gap(random_sym(n, rng), random_sym(n, rng)).holds) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("factored spectrum and Cholesky solve") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> nd;
  const std::size_t n = 30, r = 4;
  Matrix phi(n, r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < r; ++j) phi(i, j) = nd(rng);
  const std::vector<double> lam{2.0, -1.0, 0.5, 0.25};
  SymMatrix full(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < r; ++k) s += phi(i, k) * lam[k] * phi(j, k);
      full.set(i, j, s);
    }
  const auto a = factored_spectrum(phi, lam);
  const auto b = eigenvalues(full);
  for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(a.values[k] - b.values[k]) <= 1e-10 * std::abs(b.values[0]));

  const Matrix g = multiply_at_b(phi, phi);
  Matrix rhs = Matrix::identity(r);
  cholesky_solve(g, rhs, 1e-12);
  const Matrix prod = multiply(g, rhs);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) CHECK(prod(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-12));
  Matrix singular(2, 2, 1.0);
  Matrix x = Matrix::identity(2);
  CHECK_THROWS_AS(cholesky_solve(singular, x, 1e-10), kernspec::NumericalError);
}
