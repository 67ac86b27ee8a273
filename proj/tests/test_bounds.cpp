#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "kernspec/bounds.hpp"
#include "kernspec/errors.hpp"
#include "kernspec/kernelmodel.hpp"

using namespace kernspec;
using Tag = RegularityClass::Tag;

namespace {

SpectralKernel synthetic(Tag tag, double delta, int s = 0, double scale = 1.0) {
  KernelSpec spec;
  spec.family = KernelSpec::Family::synthetic;
  spec.synthetic = {tag, delta, s};
  spec.synthetic_scale = scale;
  return named_kernel(spec);
}

SpectralKernel geometric_half() { return synthetic(Tag::H2, std::numbers::ln2); }

// Plain inequality test for min{R : |λ_i| > b_R ∨ √(R b₂,R)} with λ_k = 2^{-k}.
std::size_t scan_geometric(std::size_t i) {
  // closed forms b_R = 2^{-R}, b₂,R = 4^{-R}/3 keep the tie at R = i exact
  const double li = std::ldexp(1.0, -static_cast<int>(i));
  for (std::size_t R = 1; R < 1000; ++R) {
    const double b = std::ldexp(1.0, -static_cast<int>(R));
    const double b2 = std::ldexp(1.0, -2 * static_cast<int>(R)) / 3.0;
    if (li > std::max(b, std::sqrt(static_cast<double>(R) * b2))) return R;
  }
  return 0;
}

// Table of h for H1, s = 0; rows δ = 4..8, columns β = 0, 0.1, ..., 0.9 (hundredths).
constexpr int kTable[5][10] = {
    {-50, -85, -120, -155, -190, -225, -260, -295, -330, -365},
    {-50, -95, -140, -185, -230, -275, -320, -365, -410, -455},
    {-50, -105, -160, -215, -270, -325, -380, -435, -490, -545},
    {-50, -115, -180, -245, -310, -375, -440, -505, -570, -635},
    {-50, -125, -200, -275, -350, -425, -500, -575, -650, -725},
};

}  // namespace

TEST_CASE("rational arithmetic") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(3, -6) == Rational(-1, 2));
  CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
  CHECK(Rational(1, 3) * Rational(3, 4) == Rational(1, 4));
  CHECK(Rational(1, 3) / Rational(2, 3) == Rational(1, 2));
  CHECK(Rational(-1, 3) < Rational(1, 4));
  CHECK(Rational::from_double(0.1) == Rational(1, 10));
  CHECK(Rational::from_double(-2.25) == Rational(-9, 4));
  CHECK(Rational(7, 20).to_string() == "7/20");
  CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
  CHECK_THROWS_AS(Rational::from_double(1.0 + std::ldexp(1.0, -30)), ConfigError);
  const Rational big(std::int64_t{1} << 62, 1);
  CHECK_THROWS_AS(big * big, std::overflow_error);
}

TEST_CASE("tail sums") {
  const SpectralKernel g = geometric_half();
  for (std::size_t R : {0, 1, 5, 20}) {
    const TailSums t = tail_sums(g, R);
    CHECK(t.b.total() == doctest::Approx(std::ldexp(1.0, -static_cast<int>(R))).epsilon(1e-12));
    CHECK(t.b2.total() == doctest::Approx(std::ldexp(1.0, -2 * static_cast<int>(R)) / 3.0).epsilon(1e-12));
  }

  const SpectralKernel p = synthetic(Tag::H1, 4.0);
  const double b2 = tail_sums(p, 100).b2.total();
  // Σ_{k>100} k^{-8} lies between the integrals from 101 and from 100
  CHECK(b2 >= std::pow(101.0, -7) / 7.0);
  CHECK(b2 <= std::pow(100.0, -7) / 7.0);
  // Euler-Maclaurin: Σ_{k>R} k^{-8} = R^{-7}/7 - R^{-8}/2 + (8/12) R^{-9} - ...
  const double em = std::pow(100.0, -7) / 7.0 - std::pow(100.0, -8) / 2.0 + 8.0 / 12.0 * std::pow(100.0, -9);
  CHECK(std::abs(b2 / em - 1.0) <= 1e-6);
  const TailSums pt = tail_sums(p, 10);
  CHECK(pt.b.analytic > 0.0);
  CHECK(pt.b.materialized > pt.b.analytic);

  KernelSpec lin;
  lin.family = KernelSpec::Family::linear;
  lin.d = 5;
  lin.p0 = 0.6;
  lin.p1 = 0.1;
  const SpectralKernel lk = named_kernel(lin);
  CHECK(tail_sums(lk, 6).b.total() == 0.0);
  CHECK(tail_sums(lk, 6).b2.total() == 0.0);
  CHECK(tail_sums(lk, 1).b.total() == doctest::Approx(5 * 0.06).epsilon(1e-12));
}

TEST_CASE("variance proxies") {
  const SpectralKernel g = geometric_half();
  const VarianceProxies v(g);
  CHECK(v.v1(5) == doctest::Approx(5.0));
  CHECK(v.v1p(5) == doctest::Approx(5.0));
  CHECK(v.weighted_tail(5) == doctest::Approx(1.0 / 32).epsilon(1e-12));
  CHECK(v.v2(5) == doctest::Approx(1.0 / 1024).epsilon(1e-12));
  CHECK(v.v3(5) == doctest::Approx(1.0 / 32).epsilon(1e-12));

  const SpectralKernel s1 = synthetic(Tag::H1, 4.0, 1);
  const VarianceProxies w(s1);
  CHECK(w.v1p(4) == doctest::Approx(1.0 + 4.0 + 9.0 + 16.0));

  KernelSpec gn;
  gn.family = KernelSpec::Family::gaussian_narrow;
  const VarianceProxies gv(named_kernel(gn));
  CHECK(gv.v1p(7) == doctest::Approx(7.0 * std::pow(2.0, 0.25)).epsilon(1e-12));

  KernelSpec t;
  t.family = KernelSpec::Family::threshold;
  t.d = 4;
  const VarianceProxies tv(named_kernel(t));
  // levels 0 and 1 carry the two largest |λ*|, so R = 1 + 4 is a level boundary
  CHECK(tv.v1(5) == doctest::Approx(5.0));
}

TEST_CASE("noise terms against the direct formulas") {
  const SpectralKernel g = geometric_half();
  const std::size_t n = 10000, R = 5;
  const double alpha = 0.1;
  const NoiseTerms t = noise_terms(g, n, R, alpha);
  const double b = 1.0 / 32, b2 = 1.0 / (1024.0 * 3.0), v1 = 5.0, v1p = 5.0, v2 = b * b;
  const double nn = 1e4;
  CHECK(t.gamma1 == doctest::Approx(std::sqrt(b2 * v1p / nn)).epsilon(1e-12));
  CHECK(t.gamma2 == doctest::Approx(b + std::max(std::sqrt(v2 * b / nn), v2 / nn)).epsilon(1e-12));
  CHECK(t.tau == doctest::Approx(std::sqrt(v1 * std::log(R / alpha) / nn)).epsilon(1e-12));

  const NoiseTerms t4 = noise_terms(g, 4 * n, R, alpha);
  CHECK(t4.gamma1 == doctest::Approx(t.gamma1 / 2).epsilon(1e-14));
  CHECK(t4.tau == doctest::Approx(t.tau / 2).epsilon(1e-14));

  CHECK_THROWS_AS(noise_terms(g, 5, 5, alpha), ConfigError);
  CHECK_THROWS_AS(noise_terms(g, 50, 5, 1.5), ConfigError);
  CHECK_THROWS_AS(noise_terms(g, 50, 0, alpha), ConfigError);
}

TEST_CASE("noise terms vanish past the rank") {
  KernelSpec lin;
  lin.family = KernelSpec::Family::linear;
  lin.d = 5;
  lin.p0 = 0.6;
  lin.p1 = 0.1;
  const NoiseTerms t = noise_terms(named_kernel(lin), 1000, 6, 0.1);
  CHECK(t.gamma1 == 0.0);
  CHECK(t.gamma2 == 0.0);
  CHECK(t.tau > 0.0);
}

TEST_CASE("monotonicity and limits") {
  const SpectralKernel p = synthetic(Tag::H1, 4.0);
  const VarianceProxies v(p);
  double prev_b = INFINITY, prev_g2 = INFINITY;
  for (std::size_t R = 1; R <= 60; ++R) {
    const double b = v.b(R).total();
    const double g2 = noise_terms(v, 100000, R, 0.1).gamma2;
    CHECK(b <= prev_b);
    CHECK(g2 <= prev_g2);
    prev_b = b;
    prev_g2 = g2;
  }
  double prev_g1 = INFINITY, prev_tau = INFINITY;
  for (std::size_t n = 100; n <= 100000; n *= 3) {
    const NoiseTerms t = noise_terms(v, n, 10, 0.1);
    CHECK(t.gamma1 < prev_g1);
    CHECK(t.tau < prev_tau);
    prev_g1 = t.gamma1;
    prev_tau = t.tau;
  }
  const double big = noise_terms(v, std::size_t{1} << 50, 10, 0.1).gamma2;
  CHECK(big == doctest::Approx(v.b(10).total()).epsilon(1e-6));
  std::size_t prev_r = 0;
  for (std::size_t i = 1; i <= 40; ++i) {
    const std::size_t r = R_of_i(p, v, i);
    CHECK(r >= prev_r);
    prev_r = r;
  }
}

TEST_CASE("gram bound") {
  const std::size_t R = 6, n = 1000;
  const double alpha = 0.1;
  const double v1r = static_cast<double>(n) / (3.0 * std::log(2.0 * R / alpha));
  CHECK(gram_bernstein_bound(v1r, R, n, alpha) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gram_bernstein_bound(3.0, R, 2 * n, alpha) ==
        doctest::Approx(gram_bernstein_bound(3.0, R, n, alpha) / std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(gram_bernstein_bound(1.0, 10, 10, alpha), ConfigError);
}

TEST_CASE("R(i)") {
  const SpectralKernel g = geometric_half();
  CHECK(R_of_i(g, 3) == 4);
  for (std::size_t i = 1; i <= 20; ++i) CHECK(R_of_i(g, i) == scan_geometric(i));

  KernelSpec lin;
  lin.family = KernelSpec::Family::linear;
  lin.d = 5;
  lin.p0 = 0.6;
  lin.p1 = 0.1;
  const SpectralKernel lk = named_kernel(lin);
  for (std::size_t i = 1; i <= 6; ++i) CHECK(R_of_i(lk, i) <= 6);
  CHECK_THROWS_AS(R_of_i(lk, 7), ConfigError);

  for (double delta : {3.0, 4.0}) {
    const SpectralKernel p = synthetic(Tag::H1, delta);
    for (std::size_t i = 5; i <= 50; ++i) {
      const double ratio = static_cast<double>(R_of_i(p, i)) / std::pow(static_cast<double>(i), delta / (delta - 1));
      CHECK(ratio >= 0.2);
      CHECK(ratio <= 5.0);
    }
  }
}

TEST_CASE("relative-bound envelope") {
  KernelSpec c;
  c.family = KernelSpec::Family::constant;
  c.p0 = 0.3;
  const SpectralKernel ck = named_kernel(c);
  const Theorem1Result r = theorem1_bound(ck, 1, 1000, 0.1);
  CHECK(r.Ri == 1);
  CHECK(r.envelope == doctest::Approx(0.3 * std::sqrt(std::log(10.0) / 1000)).epsilon(1e-14));
  REQUIRE(r.bound());
  CHECK_THROWS_AS(theorem1_bound(ck, 2, 1000, 0.1), ConfigError);

  // finite rank: R(i) ≤ rank and the envelope is the rank formula
  KernelSpec lin;
  lin.family = KernelSpec::Family::linear;
  lin.d = 5;
  lin.p0 = 0.6;
  lin.p1 = 0.1;
  const SpectralKernel lk = named_kernel(lin);
  const Theorem1Result l2 = theorem1_bound(lk, 2, 100000, 0.1);
  const VarianceProxies lv(lk);
  CHECK(l2.envelope == doctest::Approx(std::abs(lk.lambda(2)) *
                                       std::sqrt(lv.v1(l2.Ri) * std::log(l2.Ri / 0.1) / 100000))
                           .epsilon(1e-14));

  const SpectralKernel p = synthetic(Tag::H1, 4.0);
  const Theorem1Result early = theorem1_bound(p, 5, 20, 0.1);
  CHECK(early.pre_asymptotic);
  CHECK_FALSE(early.bound());
  CHECK_FALSE(early.blocking.empty());

  const auto n0 = theorem1_n0(p, 5, 0.1);
  REQUIRE(n0);
  CHECK_FALSE(theorem1_bound(p, 5, *n0, 0.1).pre_asymptotic);
  CHECK(theorem1_bound(p, 5, *n0 - 1, 0.1).pre_asymptotic);
}

TEST_CASE("rate rows") {
  const RateRow a = theorem2_rate({Tag::H1, 4.0, 0}, 100, 10000);
  CHECK(a.B == doctest::Approx(1e-9).epsilon(1e-12));
  const RateRow b = theorem2_rate({Tag::H2, std::log(5.0), 0}, 3, 100);
  CHECK(b.B == doctest::Approx(std::exp(-3 * std::log(5.0)) * std::sqrt(3.0) / 10).epsilon(1e-12));
  const RateRow c = theorem2_rate({Tag::H3, 3.0, 1}, 2, 400);
  CHECK(c.B == doctest::Approx(std::exp(-4.0) / 20).epsilon(1e-12));
  CHECK_FALSE(c.regime.empty());

  CHECK_THROWS_AS(theorem2_rate({Tag::H3, 3.0, 0}, 2, 400), ConfigError);
  CHECK_THROWS_AS(theorem2_rate({Tag::H1, 2.5, 1}, 2, 400), ConfigError);
  CHECK_THROWS_AS(theorem2_rate({Tag::H1, 4.0, 0}, 500, 400), ConfigError);
}

TEST_CASE("rate exponents reproduce the s = 0 table exactly") {
  for (int row = 0; row < 5; ++row)
    for (int col = 0; col < 10; ++col) {
      const Rational h = rate_exponent(Rational(4 + row), 0, Rational(col, 10));
      CHECK(h == Rational(kTable[row][col], 100));
    }
  CHECK(rate_exponent({Tag::H1, 4.0, 0}, 0.5) == -2.25);
  CHECK(rate_exponent({Tag::H1, 8.0, 0}, 0.9) == -7.25);
  CHECK(rate_exponent({Tag::H1, 6.0, 0}, 0.0) == -0.5);
  CHECK(rate_exponent({Tag::H1, 4.0, 1}, 0.1) == doctest::Approx(-0.7).epsilon(1e-14));
  CHECK_THROWS_AS(rate_exponent({Tag::H2, 4.0, 0}, 0.5), ConfigError);
  CHECK_THROWS_AS(rate_exponent(Rational(3), 1, Rational(1, 2)), ConfigError);
}

TEST_CASE("bound report") {
  const SpectralKernel p = synthetic(Tag::H1, 4.0);
  const BoundReport r = bound_report(p, 100000, 0.1, 3, 0, RegularityClass{Tag::H1, 4.0, 0});
  CHECK(r.R == r.theorem1.Ri);
  CHECK(r.v2 == doctest::Approx(r.bR.total() * VarianceProxies(p).weighted_tail(r.R)).epsilon(1e-12));
  REQUIRE(r.theorem2);
  CHECK(r.theorem2->B == doctest::Approx(std::pow(3.0, -3.5) / std::sqrt(1e5)).epsilon(1e-12));
  CHECK(r.n0.has_value());

  const BoundReport fixed = bound_report(p, 100000, 0.1, 3, 12, std::nullopt);
  CHECK(fixed.R == 12);
  CHECK_FALSE(fixed.theorem2);
}

TEST_CASE("missing tail data") {
  KernelSpec t;
  t.family = KernelSpec::Family::threshold;
  t.d = 3;
  // Σ|λ_k| diverges for the d = 3 threshold kernel
  const VarianceProxies v(named_kernel(t));
  CHECK(std::isinf(v.b(10).total()));
  CHECK(std::isfinite(v.b2(10).total()));
}
