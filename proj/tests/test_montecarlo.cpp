#include "doctest.h"

#include <cmath>
#include <sstream>

#include "kernspec/errors.hpp"
#include "kernspec/kernelmodel.hpp"
#include "kernspec/montecarlo.hpp"

using namespace kernspec;

namespace {

SpectralKernel make(KernelSpec::Family f, int d = 3, double p0 = 0.5, double p1 = 0.0) {
  KernelSpec s;
  s.family = f;
  s.d = d;
  s.p0 = p0;
  s.p1 = p1;
  return named_kernel(s);
}

}  // namespace

TEST_CASE("sphere samples") {
  const SampleSet s = sample_points({DomainKind::sphere, 5}, 4000, 3);
  REQUIRE(s.dim == 5);
  std::vector<double> mean(5, 0.0);
  for (std::size_t i = 0; i < s.n; ++i) {
    double nrm = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      nrm += s.point(i)[k] * s.point(i)[k];
      mean[k] += s.point(i)[k] / static_cast<double>(s.n);
    }
    CHECK(std::abs(nrm - 1.0) <= 1e-14);
  }
  // each coordinate has variance 1/d, so the mean is within ~4.5/sqrt(5n)
  for (double m : mean) CHECK(std::abs(m) <= 0.032);
}

TEST_CASE("line samples follow N(0, 1/2)") {
  const SampleSet s = sample_points({DomainKind::gaussian_line, 1}, 20000, 9);
  double m = 0.0, v = 0.0;
  for (double x : s.coords) m += x / 20000.0;
  for (double x : s.coords) v += (x - m) * (x - m) / 19999.0;
  CHECK(std::abs(m) <= 0.025);
  CHECK(std::abs(v - 0.5) <= 0.025);
  CHECK_THROWS_AS(sample_points({DomainKind::abstract, 0}, 10, 1), ConfigError);
}

TEST_CASE("samples are reproducible and printable") {
  const SampleSet a = sample_points({DomainKind::sphere, 3}, 50, 42);
  const SampleSet b = sample_points({DomainKind::sphere, 3}, 50, 42);
  const SampleSet c = sample_points({DomainKind::sphere, 3}, 50, 43);
  CHECK(a.coords == b.coords);
  CHECK(a.coords != c.coords);
  std::ostringstream out;
  write_samples_csv(a, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x0,x1,x2");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 50);
}

TEST_CASE("kernel matrix entries") {
  const SampleSet s = sample_points({DomainKind::sphere, 4}, 30, 5);
  const auto tc = kernel_matrix(make(KernelSpec::Family::constant, 4, 0.3), s);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 30; ++j) CHECK(tc(i, j) == doctest::Approx(0.3 / 30).epsilon(1e-14));

  const auto tl = kernel_matrix(make(KernelSpec::Family::linear, 4, 0.5, 0.1), s);
  const auto tt = kernel_matrix(make(KernelSpec::Family::threshold, 4), s);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double t = 0.0;
      for (std::size_t k = 0; k < 4; ++k) t += s.point(i)[k] * s.point(j)[k];
      CHECK(tl(i, j) == doctest::Approx((0.5 + 0.2 * t) / 30).epsilon(1e-12));
      CHECK(tt(i, j) == (t >= 0.0 ? 1.0 / 30 : 0.0));
    }
}

TEST_CASE("finite-rank decomposition is exact") {
  const SpectralKernel k = make(KernelSpec::Family::linear, 5, 0.6, 0.1);
  const SampleSet s = sample_points({DomainKind::sphere, 5}, 200, 17);
  const TruncationDecomposition dec = decompose(k, s, 6);
  CHECK(dec.er_max <= 1e-12);
  CHECK(dec.er_norm <= 1e-12);
  CHECK(dec.a_norm <= 1e-12);
  CHECK(dec.gram_dev > 0.0);
  CHECK(dec.gram_dev < 1.0);
  CHECK_THROWS_AS(decompose(k, s, 201), ConfigError);
}

TEST_CASE("compressed residual norms are consistent") {
  const SpectralKernel k = make(KernelSpec::Family::logistic, 3);
  const SampleSet s = sample_points({DomainKind::sphere, 3}, 150, 21);
  const TruncationDecomposition dec = decompose(k, s, 4);
  REQUIRE(dec.residual_norms);
  CHECK(dec.a_norm <= 3.0 * dec.span_residual + 1e-14);
  CHECK(dec.span_residual <= dec.er_norm + 1e-14);
  CHECK(dec.p2ep2_norm <= dec.er_norm + 1e-14);
  CHECK(dec.er_norm == doctest::Approx(linalg::op_norm(dec.er)).epsilon(1e-10));

  const TruncationDecomposition cheap = decompose(k, s, 4, DecomposeOptions{false});
  CHECK_FALSE(cheap.residual_norms);
  CHECK(cheap.gram_dev == doctest::Approx(dec.gram_dev).epsilon(1e-14));
}

TEST_CASE("adjacency sampling") {
  const SpectralKernel k = make(KernelSpec::Family::threshold, 3);
  const SampleSet s = sample_points({DomainKind::sphere, 3}, 400, 8);
  const Adjacency a = sample_adjacency(k, s, 99);
  for (std::size_t i = 0; i < a.n; ++i) {
    CHECK_FALSE(a(i, i));
    for (std::size_t j = 0; j < i; ++j) {
      CHECK(a(i, j) == a(j, i));
      double t = 0.0;
      for (std::size_t c = 0; c < 3; ++c) t += s.point(i)[c] * s.point(j)[c];
      if (a(i, j)) CHECK(t >= 0.0);
    }
  }
  CHECK(std::abs(a.density() - 0.5) <= 0.03);

  const SpectralKernel half = make(KernelSpec::Family::constant, 3, 0.5);
  const Adjacency b = sample_adjacency(half, s, 1);
  const Adjacency c = sample_adjacency(half, s, 1);
  CHECK(b.bits == c.bits);
  CHECK(std::abs(b.density() - 0.5) <= 0.01);
}

TEST_CASE("empirical orthonormality") {
  const SpectralKernel sphere = make(KernelSpec::Family::threshold, 3);
  const SampleSet s = sample_points({DomainKind::sphere, 3}, 2000, 4);
  CHECK(orthonormality_diagnostic(sphere, s, 10).max_abs() <= 0.15);

  // φ_k² is heavy-tailed under the line measure (sd of the k = 5 diagonal is
  // about 0.19 at n = 5000), so only the first functions are held to 0.15.
  KernelSpec g;
  g.family = KernelSpec::Family::gaussian_wide;
  const SampleSet line = sample_points({DomainKind::gaussian_line, 1}, 5000, 4);
  CHECK(orthonormality_diagnostic(named_kernel(g), line, 3).max_abs() <= 0.15);

  // the narrow functions are not orthonormal here: ∫φ_0² = 0.765
  g.family = KernelSpec::Family::gaussian_narrow;
  const SpectralKernel narrow = named_kernel(g);
  CHECK_FALSE(narrow.orthonormal_basis);
  CHECK(std::abs(orthonormality_diagnostic(narrow, line, 1).max_diag - 0.2346) <= 0.02);
}
