#pragma once

// Seeded Monte Carlo studies: per-index deviations of λ_i(T_n) from λ_i,
// bound coverage, relative versus absolute (δ₂) comparison, slope and
// envelope fits, and the rate-exponent table.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kernspec/bounds.hpp"
#include "kernspec/kernelmodel.hpp"

namespace kernspec {

struct StudyOptions {
  std::size_t threads = 1;
};

struct TrialRecord {
  std::size_t trial = 0;  ///< substream index
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::string kernel_id;
  std::vector<double> spectrum;  ///< top eigenvalues of T_n by |λ|
  std::vector<std::size_t> indices;
  std::vector<double> deviations;  ///< |λ_i(T_n) − λ_i| per index
  std::optional<double> gram_dev;
  std::optional<double> a_norm;
  std::optional<double> er_norm;
  std::optional<double> delta2;
};

struct IndexSummary {
  std::size_t n = 0;
  std::size_t i = 0;
  double lambda = 0.0;
  std::size_t trials = 0;
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double upper = 0.0;  ///< empirical (1−α)-quantile
  std::optional<double> envelope;  ///< unit-constant relative-bound envelope
  bool pre_asymptotic = false;
  std::string blocking;
};

struct SlopeFit {
  std::size_t i = 0;
  std::vector<std::size_t> n_grid;
  double slope = 0.0;  ///< NaN when degenerate
  double intercept = 0.0;
  double residual = 0.0;  ///< RMS residual in log space
  bool degenerate = false;
  std::string note;
};

struct EnvelopeCheck {
  std::size_t i = 0;
  std::string reference;
  std::size_t calibration_n = 0;
  double constant = 0.0;  ///< max over calibration trials of deviation/reference
  struct Point {
    std::size_t n = 0;
    double reference = 0.0;
    double fraction_within = 0.0;
  };
  std::vector<Point> points;  ///< larger n only
  std::string note;
};

struct CoverageResult {
  std::string name;
  double bound = 0.0;  ///< unit-constant bound value
  std::optional<double> constant;  ///< calibrated constant, when needed
  std::size_t tested = 0;
  std::size_t violations = 0;
  double fraction = 0.0;
  std::string note;
};

struct ComparisonRow {
  std::size_t i = 0;
  double lambda = 0.0;
  double median_deviation = 0.0;
  std::optional<double> median_relative;  ///< median of deviation/|λ_i|
  double median_delta2 = 0.0;
  double ratio = 0.0;  ///< median δ₂ / median deviation
};

struct StudyResult {
  std::string kind;
  std::string kernel_id;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> n_grid;
  std::vector<std::size_t> indices;
  std::vector<TrialRecord> trials;  ///< ordered by (n, substream index)
  std::vector<IndexSummary> summaries;
  std::vector<SlopeFit> slopes;
  std::vector<EnvelopeCheck> envelopes;
  std::vector<CoverageResult> coverage;
  std::vector<ComparisonRow> comparison;
  std::size_t operator_truncation = 0;  ///< K used for δ₂
  double truncation_error = 0.0;        ///< (Σ_{k>K} λ_k²)^{1/2}
  std::vector<std::string> notes;
};

/// Reference rate r(n, i) for envelope checks; the default is the
/// relative-bound envelope at level α.
using EnvelopeReference = std::function<double(std::size_t n, std::size_t i)>;

StudyResult deviation_study(const SpectralKernel& kernel, const std::vector<std::size_t>& n_grid,
                            const std::vector<std::size_t>& indices, std::size_t trials, double alpha,
                            std::uint64_t seed, const StudyOptions& options = {},
                            const EnvelopeReference& reference = {}, const std::string& reference_name = {});

struct CoverageOptions {
  /// Also test γ₁ against ‖A‖ and γ₂ against ‖E_R‖ (needs n×n eigenvalues).
  bool residual_norms = true;
};

/// Gram-bound coverage over all trials; γ-based checks calibrate a constant
/// on the first half of the substreams and test on the second half.
StudyResult coverage_study(const SpectralKernel& kernel, std::size_t n, std::size_t R, double alpha,
                           std::size_t trials, std::uint64_t seed, const StudyOptions& options = {},
                           const CoverageOptions& coverage = {});

StudyResult relative_vs_absolute(const SpectralKernel& kernel, std::size_t n, std::size_t trials,
                                 const std::vector<std::size_t>& indices, std::uint64_t seed,
                                 const StudyOptions& options = {});

struct RateTable {
  std::vector<RegularityClass> rows;
  std::vector<double> betas;
  std::vector<std::vector<Rational>> cells;
  std::vector<std::string> notes;
};

RateTable emit_rate_table(const std::vector<RegularityClass>& reg_grid, const std::vector<double>& beta_grid);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};
LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kernspec
