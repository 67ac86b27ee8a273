#include "doctest.h"

#include <cmath>

#include "kernspec/errors.hpp"
#include "kernspec/experiments.hpp"
#include "kernspec/kernelmodel.hpp"
#include "kernspec/linalg.hpp"
#include "kernspec/montecarlo.hpp"

using namespace kernspec;

namespace {

SpectralKernel linear_kernel(int d) {
  KernelSpec s;
  s.family = KernelSpec::Family::linear;
  s.d = d;
  s.p0 = 0.6;
  s.p1 = 0.1;
  return named_kernel(s);
}

}  // namespace

TEST_CASE("quantile interpolates between order statistics") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.9) == doctest::Approx(4.6));
  CHECK(quantile({7.0}, 0.3) == 7.0);
  CHECK(quantile({1.0, 9.0}, 0.0) == 1.0);
  CHECK(quantile({1.0, 9.0}, 1.0) == 9.0);
  CHECK_THROWS_AS(quantile({}, 0.5), ConfigError);
}

TEST_CASE("least squares line") {
  const LineFit f = least_squares_line({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.rms_residual <= 1e-14);
  const LineFit g = least_squares_line({0, 1, 2}, {0, 1, 0});
  CHECK(g.slope == doctest::Approx(0.0).scale(1.0));
  CHECK(g.intercept == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(least_squares_line({1}, {1}), ConfigError);
  CHECK_THROWS_AS(least_squares_line({2, 2}, {1, 3}), ConfigError);
}

TEST_CASE("deviation study") {
  const SpectralKernel k = linear_kernel(5);
  const StudyResult r = deviation_study(k, {100, 200}, {1, 2}, 30, 0.1, 7);
  CHECK(r.kind == "deviation");
  CHECK(r.trials.size() == 60);
  REQUIRE(r.summaries.size() == 4);
  REQUIRE(r.slopes.size() == 2);

  // trial records reproduce from their own seed
  const TrialRecord& t = r.trials[31];
  CHECK(t.n == 200);
  const SampleSet s = sample_points(k.domain, t.n, t.seed);
  const linalg::Spectrum ev = linalg::eigenvalues(kernel_matrix(k, s));
  CHECK(t.deviations[0] == doctest::Approx(std::abs(ev[0] - k.lambda(1))).epsilon(1e-9));
  CHECK(t.deviations[1] == doctest::Approx(std::abs(ev[1] - k.lambda(2))).epsilon(1e-9));

  for (const IndexSummary& sm : r.summaries) {
    CHECK(sm.trials == 30);
    CHECK(sm.q25 <= sm.median);
    CHECK(sm.median <= sm.q75);
    CHECK(sm.q75 <= sm.upper);
  }
  for (const SlopeFit& f : r.slopes) CHECK_FALSE(f.degenerate);

  CHECK_THROWS_AS(deviation_study(k, {100}, {1}, 29, 0.1, 7), ConfigError);
  CHECK_THROWS_AS(deviation_study(k, {100}, {101}, 30, 0.1, 7), ConfigError);
  KernelSpec syn;
  syn.family = KernelSpec::Family::synthetic;
  CHECK_THROWS_AS(deviation_study(named_kernel(syn), {100}, {1}, 30, 0.1, 7), ConfigError);
}

TEST_CASE("slopes of rounding-level deviations are degenerate") {
  KernelSpec s;
  s.family = KernelSpec::Family::constant;
  s.p0 = 0.3;
  const StudyResult r = deviation_study(named_kernel(s), {50, 100}, {1}, 30, 0.1, 2);
  REQUIRE(r.slopes.size() == 1);
  CHECK(r.slopes[0].degenerate);
  CHECK(std::isnan(r.slopes[0].slope));
  for (const IndexSummary& sm : r.summaries) CHECK(sm.median <= 1e-13);
}

TEST_CASE("studies are reproducible and thread-count independent") {
  KernelSpec s;
  s.family = KernelSpec::Family::threshold;
  const SpectralKernel k = named_kernel(s);
  const StudyResult a = deviation_study(k, {80}, {1, 2}, 30, 0.1, 3, StudyOptions{1});
  const StudyResult b = deviation_study(k, {80}, {1, 2}, 30, 0.1, 3, StudyOptions{3});
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    CHECK(a.trials[t].seed == b.trials[t].seed);
    CHECK(a.trials[t].deviations == b.trials[t].deviations);
  }
  const StudyResult c = deviation_study(k, {80}, {1, 2}, 30, 0.1, 4);
  CHECK(a.trials[0].deviations != c.trials[0].deviations);
}

TEST_CASE("custom envelope reference") {
  const SpectralKernel k = linear_kernel(5);
  const EnvelopeReference ref = [](std::size_t n, std::size_t) { return 1.0 / std::sqrt(static_cast<double>(n)); };
  const StudyResult r = deviation_study(k, {100, 400}, {1}, 30, 0.1, 5, {}, ref, "n^(-1/2)");
  REQUIRE(r.envelopes.size() == 1);
  const EnvelopeCheck& e = r.envelopes[0];
  CHECK(e.reference == "n^(-1/2)");
  CHECK(e.calibration_n == 100);
  double worst = 0.0;
  for (const TrialRecord& t : r.trials)
    if (t.n == 100) worst = std::max(worst, t.deviations[0] * 10.0);
  CHECK(e.constant == doctest::Approx(worst));
  REQUIRE(e.points.size() == 1);
  CHECK(e.points[0].n == 400);
  CHECK(e.points[0].fraction_within >= 0.0);
  CHECK(e.points[0].fraction_within <= 1.0);
}

TEST_CASE("coverage study") {
  const SpectralKernel k = linear_kernel(5);
  const StudyResult r = coverage_study(k, 200, 6, 0.1, 40, 11);
  CHECK(r.trials.size() == 40);
  REQUIRE_FALSE(r.coverage.empty());
  const CoverageResult& gram = r.coverage[0];
  CHECK(gram.tested == 40);
  CHECK(gram.bound > 0.0);
  std::size_t count = 0;
  for (const TrialRecord& t : r.trials) {
    REQUIRE(t.gram_dev);
    REQUIRE(t.er_norm);
    CHECK(*t.er_norm <= 1e-12);
    if (*t.gram_dev > gram.bound) ++count;
  }
  CHECK(gram.violations == count);
  // γ-based checks: the bounds are zero past the rank and the residuals vanish
  for (std::size_t c = 1; c < r.coverage.size(); ++c) {
    CHECK(r.coverage[c].bound == 0.0);
    CHECK(r.coverage[c].violations == 0);
  }

  const StudyResult cheap = coverage_study(k, 200, 6, 0.1, 40, 11, {}, CoverageOptions{false});
  CHECK(cheap.coverage.size() == 1);
  CHECK_FALSE(cheap.trials[0].er_norm);
  CHECK(*cheap.trials[5].gram_dev == *r.trials[5].gram_dev);
  CHECK_THROWS_AS(coverage_study(k, 200, 200, 0.1, 40, 11), ConfigError);
}

TEST_CASE("relative versus absolute") {
  const SpectralKernel k = linear_kernel(5);
  const StudyResult r = relative_vs_absolute(k, 150, 30, {1, 2}, 9);
  REQUIRE(r.comparison.size() == 2);
  CHECK(r.truncation_error == 0.0);
  for (const ComparisonRow& row : r.comparison) {
    CHECK(row.median_delta2 >= row.median_deviation * (1 - 1e-12));
    CHECK(row.ratio == doctest::Approx(row.median_delta2 / row.median_deviation));
    REQUIRE(row.median_relative);
  }
  for (const TrialRecord& t : r.trials) {
    REQUIRE(t.delta2);
    for (double dev : t.deviations) CHECK(dev <= *t.delta2 + 1e-12);
  }
}

TEST_CASE("rate table") {
  const RateTable t = emit_rate_table({{RegularityClass::Tag::H1, 5.0, 0}}, {0.0, 0.4, 0.9});
  REQUIRE(t.cells.size() == 1);
  CHECK(t.cells[0][0] == Rational(-1, 2));
  CHECK(t.cells[0][1] == Rational(-23, 10));
  CHECK(t.cells[0][2] == Rational(-91, 20));
  CHECK_THROWS_AS(emit_rate_table({{RegularityClass::Tag::H2, 5.0, 0}}, {0.5}), ConfigError);

  const RateTable s1 = emit_rate_table({{RegularityClass::Tag::H1, 4.0, 1}}, {0.1});
  CHECK(s1.cells[0][0] == Rational(-7, 10));
  CHECK_FALSE(s1.notes.empty());
}
