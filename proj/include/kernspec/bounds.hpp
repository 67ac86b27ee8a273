#pragma once

// Theoretical quantities of the relative concentration bounds: variance
// proxies, eigenvalue tail sums, the noise terms γ₁/γ₂/τ, R(i), the
// relative-bound envelope, the rate rows and the rate exponents.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kernspec/kernelmodel.hpp"

namespace kernspec {

/// Exact rational p/q with q > 0 in lowest terms; arithmetic throws
/// std::overflow_error rather than wrapping.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  /// Best approximation with denominator ≤ 10^6; throws ConfigError unless
  /// it reproduces x to 1e-12.
  static Rational from_double(double x);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const;

  friend Rational operator+(Rational a, Rational b);
  friend Rational operator-(Rational a, Rational b);
  friend Rational operator*(Rational a, Rational b);
  friend Rational operator/(Rational a, Rational b);
  friend Rational operator-(Rational a) { return Rational(-a.num_, a.den_); }
  friend bool operator==(Rational a, Rational b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend bool operator<(Rational a, Rational b);
  friend bool operator<=(Rational a, Rational b) { return !(b < a); }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Variance proxies and eigenvalue tails of a spectral kernel. Materialized
/// terms are summed directly; beyond K_max the kernel's decay and growth
/// models are summed analytically (integral bounds for polynomial models,
/// geometric or numeric sums for exponential ones).
class VarianceProxies {
 public:
  explicit VarianceProxies(const SpectralKernel& kernel);

  double v1(std::size_t R) const;   ///< ‖Σ_{k≤R} φ_k²‖_∞ (upper bound off level boundaries)
  double v1p(std::size_t R) const;  ///< Σ_{k≤R} ‖φ_k‖²_∞
  /// (Σ_{k>R} |λ_k| ‖φ_k‖²_∞) · b_R
  double v2(std::size_t R) const;
  double v3(std::size_t R) const;   ///< Σ_{k>R} |λ_k| ‖φ_k‖_∞
  /// Σ_{k>R} |λ_k| ‖φ_k‖²_∞, the first factor of v2.
  double weighted_tail(std::size_t R) const;

  struct Tail {
    double materialized = 0.0;  ///< Σ over R < k ≤ K_max
    double analytic = 0.0;      ///< bound on Σ over k > K_max
    double total() const { return materialized + analytic; }
  };
  Tail b(std::size_t R) const;   ///< Σ_{k>R} |λ_k|
  Tail b2(std::size_t R) const;  ///< Σ_{k>R} λ_k²

  std::size_t materialized() const { return lambda_.size(); }

 private:
  std::vector<double> lambda_;
  std::vector<double> sup_;
  std::vector<double> v1_prefix_;
  std::vector<double> v1p_prefix_;
  // suffix[R] = Σ_{R < k ≤ K} (1-based k)
  std::vector<double> abs_suffix_, sq_suffix_, w2_suffix_, w1_suffix_;
  double tail_abs_ = 0.0, tail_sq_ = 0.0, tail_w2_ = 0.0, tail_w1_ = 0.0;
  DecayModel decay_;
  GrowthModel growth_;
  bool truncated_ = false;
  std::string kernel_id_;

  double growth_sq_sum(std::size_t from, std::size_t to) const;
};

struct TailSums {
  VarianceProxies::Tail b;
  VarianceProxies::Tail b2;
};

TailSums tail_sums(const SpectralKernel& kernel, std::size_t R);

struct NoiseTerms {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double tau = 0.0;
};

/// γ₁ = √(b₂,R V1′(R)/n), γ₂ = b_R + max(√(V2(R) b_R/n), V2(R)/n),
/// τ = √(V1(R) log(R/α)/n). Requires 1 ≤ R < n and 0 < α < 1.
NoiseTerms noise_terms(const SpectralKernel& kernel, std::size_t n, std::size_t R, double alpha);
NoiseTerms noise_terms(const VarianceProxies& proxies, std::size_t n, std::size_t R, double alpha);

/// √(3 V1(R) log(2R/α)/n), the high-probability bound on ‖Φ_RᵀΦ_R − Id‖.
double gram_bernstein_bound(double v1r, std::size_t R, std::size_t n, double alpha);

/// min{R ≥ 1 : |λ_i| > b_R ∨ √(R b₂,R)} by ascending scan.
std::size_t R_of_i(const SpectralKernel& kernel, std::size_t i);
std::size_t R_of_i(const SpectralKernel& kernel, const VarianceProxies& proxies, std::size_t i);

struct Theorem1Result {
  std::size_t i = 0;
  std::size_t Ri = 0;
  double lambda_i = 0.0;
  double v1 = 0.0;
  /// |λ_i| √(V1(R(i)) log(R(i)/α)/n), unit constant; always computed.
  double envelope = 0.0;
  double gamma2 = 0.0;
  double tau = 0.0;
  bool pre_asymptotic = false;
  std::string blocking;  ///< the failing condition when pre_asymptotic
  /// The bound, present only past n₀.
  std::optional<double> bound() const {
    return pre_asymptotic ? std::nullopt : std::optional<double>(envelope);
  }
};

Theorem1Result theorem1_bound(const SpectralKernel& kernel, std::size_t i, std::size_t n, double alpha);
Theorem1Result theorem1_bound(const SpectralKernel& kernel, const VarianceProxies& proxies, std::size_t i,
                              std::size_t n, double alpha);

/// Smallest n with R(i) < n, γ₂(n, R(i)) < |λ_i| and τ < 1/2; nullopt when
/// γ₂ never drops below |λ_i| (b_R itself is too large).
std::optional<std::size_t> theorem1_n0(const SpectralKernel& kernel, std::size_t i, double alpha);

struct RateRow {
  double B = 0.0;
  std::string regime;
};

/// Evaluates the applicable rate row B(i, n) literally.
RateRow theorem2_rate(const RegularityClass& reg, std::size_t i, std::size_t n);

/// Exponent h of n^h for i = n^β, exactly. H1 only.
Rational rate_exponent(Rational delta, int s, Rational beta);
double rate_exponent(const RegularityClass& reg, double beta);

struct BoundReport {
  std::string kernel_id;
  std::size_t i = 0;
  std::size_t n = 0;
  double alpha = 0.0;
  std::size_t R = 0;
  std::size_t k_max = 0;
  std::string tail_model;
  VarianceProxies::Tail bR;
  VarianceProxies::Tail b2R;
  double v1 = 0.0, v1p = 0.0, v2 = 0.0, v3 = 0.0;
  NoiseTerms noise;
  double gram_bound = 0.0;
  Theorem1Result theorem1;
  std::optional<std::size_t> n0;
  std::optional<RateRow> theorem2;
  std::optional<RegularityClass> regularity;
};

/// All quantities for (kernel, n, α, i) at truncation R; R = 0 selects R(i).
BoundReport bound_report(const SpectralKernel& kernel, std::size_t n, double alpha, std::size_t i, std::size_t R,
                         const std::optional<RegularityClass>& regularity);

}  // namespace kernspec
