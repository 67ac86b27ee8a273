#include "kernspec/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "kernspec/errors.hpp"

namespace kernspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t narrow(__int128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw std::overflow_error("rational arithmetic overflows 64 bits");
  return static_cast<std::int64_t>(v);
}

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Rational make(__int128 num, __int128 den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return Rational(narrow(num), narrow(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g > 1 ? num / g : num;
  den_ = g > 1 ? den / g : den;
}

Rational Rational::from_double(double x) {
  if (!std::isfinite(x)) throw ConfigError("cannot represent a non-finite value as a rational");
  constexpr std::int64_t kMaxDen = 1000000;
  // Continued-fraction convergents.
  const double sign = x < 0 ? -1.0 : 1.0;
  double rest = std::abs(x);
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(rest);
    if (a > 9e15) break;
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t p2 = ai * p1 + p0;
    const std::int64_t q2 = ai * q1 + q0;
    if (q2 > kMaxDen) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = rest - a;
    if (std::abs(static_cast<double>(p1) / static_cast<double>(q1) - std::abs(x)) <= 1e-15 * std::max(1.0, std::abs(x)) ||
        frac == 0.0)
      break;
    rest = 1.0 / frac;
  }
  if (q1 == 0) throw ConfigError("cannot represent " + std::to_string(x) + " as a rational");
  const Rational r(sign < 0 ? -p1 : p1, q1);
  if (std::abs(r.to_double() - x) > 1e-12 * std::max(1.0, std::abs(x)))
    throw ConfigError("value " + std::to_string(x) + " has no rational form with denominator <= 1e6");
  return r;
}

std::string Rational::to_string() const {
  return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(Rational a, Rational b) {
  return make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
              static_cast<__int128>(a.den_) * b.den_);
}

Rational operator-(Rational a, Rational b) { return a + (-b); }

Rational operator*(Rational a, Rational b) {
  return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
}

Rational operator/(Rational a, Rational b) {
  return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
}

bool operator<(Rational a, Rational b) {
  return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
}

// --- tails -------------------------------------------------------------------

namespace {

// Σ_{k>S} (model(k))^power
double decay_tail(const DecayModel& m, std::size_t start, int power) {
  const double c = std::pow(m.scale, power);
  const double rate = m.rate * power;
  switch (m.kind) {
    case DecayModel::Kind::none:
      return 0.0;
    case DecayModel::Kind::polynomial: {
      if (rate <= 1.0) return kInf;
      if (start == 0) return c + c / (rate - 1.0);
      return c * std::pow(static_cast<double>(start), 1.0 - rate) / (rate - 1.0);
    }
    case DecayModel::Kind::exponential:
      return c * std::exp(-rate * (start + 1.0)) / (-std::expm1(-rate));
  }
  return 0.0;
}

// Σ_{k>S} decay(k)·growth(k)^power
double weighted_tail_sum(const DecayModel& m, const GrowthModel& g, std::size_t start, int power) {
  if (m.kind == DecayModel::Kind::none) return 0.0;
  const double c = m.scale * std::pow(g.scale, power);
  if (c == 0.0) return 0.0;
  const double grow = g.rate * power;
  if (m.kind == DecayModel::Kind::polynomial) {
    if (g.kind == GrowthModel::Kind::exponential && grow > 0.0) return kInf;
    const double e = m.rate - (g.kind == GrowthModel::Kind::polynomial ? grow : 0.0);
    if (e <= 1.0) return kInf;
    if (start == 0) return c + c / (e - 1.0);
    return c * std::pow(static_cast<double>(start), 1.0 - e) / (e - 1.0);
  }
  // exponential decay
  if (g.kind == GrowthModel::Kind::exponential || grow == 0.0) {
    const double e = m.rate - (g.kind == GrowthModel::Kind::exponential ? grow : 0.0);
    if (e <= 0.0) return kInf;
    return c * std::exp(-e * (start + 1.0)) / (-std::expm1(-e));
  }
  // e^{-δk} k^{q}: sum numerically until the terms are negligible
  double sum = 0.0;
  double prev_term = kInf;
  for (std::size_t k = start + 1; k < start + 10000000; ++k) {
    const double kk = static_cast<double>(k);
    const double term = c * std::exp(-m.rate * kk + grow * std::log(kk));
    sum += term;
    if (term < prev_term && term <= 1e-17 * sum) return sum;
    prev_term = term;
  }
  return kInf;
}

}  // namespace

VarianceProxies::VarianceProxies(const SpectralKernel& kernel)
    : lambda_(kernel.eigenvalues),
      sup_(kernel.sup_norms),
      v1_prefix_(kernel.v1_prefix),
      growth_(kernel.sup_growth),
      truncated_(kernel.truncated),
      kernel_id_(kernel.id) {
  const std::size_t count = lambda_.size();
  if (sup_.size() != count) throw ConfigError("kernel " + kernel.id + ": missing eigenfunction sup-norm data");
  v1p_prefix_.assign(count + 1, 0.0);
  for (std::size_t k = 0; k < count; ++k) v1p_prefix_[k + 1] = v1p_prefix_[k] + sup_[k] * sup_[k];
  if (v1_prefix_.size() != count + 1) v1_prefix_ = v1p_prefix_;

  abs_suffix_.assign(count + 1, 0.0);
  sq_suffix_.assign(count + 1, 0.0);
  w2_suffix_.assign(count + 1, 0.0);
  w1_suffix_.assign(count + 1, 0.0);
  for (std::size_t k = count; k-- > 0;) {
    const double a = std::abs(lambda_[k]);
    abs_suffix_[k] = abs_suffix_[k + 1] + a;
    sq_suffix_[k] = sq_suffix_[k + 1] + a * a;
    w2_suffix_[k] = w2_suffix_[k + 1] + a * sup_[k] * sup_[k];
    w1_suffix_[k] = w1_suffix_[k + 1] + a * sup_[k];
  }

  if (!truncated_) return;
  const DecayModel& tail = kernel.tail;
  if (tail.kind == DecayModel::Kind::none) {
    const double last = count ? std::abs(lambda_.back()) : 0.0;
    if (last * static_cast<double>(count) > 1e-8)
      throw ConfigError("kernel " + kernel.id + " has no tail model and non-negligible truncation mass beyond K_max = " +
                        std::to_string(count) + "; raise K_max");
    return;
  }
  tail_abs_ = decay_tail(tail, count, 1);
  tail_sq_ = decay_tail(tail, count, 2);
  if (growth_.kind == GrowthModel::Kind::none) {
    tail_w2_ = tail_w1_ = std::numeric_limits<double>::quiet_NaN();
  } else {
    tail_w2_ = weighted_tail_sum(tail, growth_, count, 2);
    tail_w1_ = weighted_tail_sum(tail, growth_, count, 1);
  }
  decay_ = tail;
}

double VarianceProxies::growth_sq_sum(std::size_t from, std::size_t to) const {
  if (to < from) return 0.0;
  if (growth_.kind == GrowthModel::Kind::none)
    throw ConfigError("kernel " + kernel_id_ + ": missing sup-norm data beyond K_max = " +
                      std::to_string(lambda_.size()));
  double s = 0.0;
  for (std::size_t k = from; k <= to; ++k) {
    const double g = growth_.at(static_cast<double>(k));
    s += g * g;
  }
  return s;
}

double VarianceProxies::v1(std::size_t R) const {
  const std::size_t count = lambda_.size();
  if (R <= count) return v1_prefix_[R];
  return v1_prefix_[count] + growth_sq_sum(count + 1, R);
}

double VarianceProxies::v1p(std::size_t R) const {
  const std::size_t count = lambda_.size();
  if (R <= count) return v1p_prefix_[R];
  return v1p_prefix_[count] + growth_sq_sum(count + 1, R);
}

VarianceProxies::Tail VarianceProxies::b(std::size_t R) const {
  const std::size_t count = lambda_.size();
  if (R <= count) return {abs_suffix_[R], tail_abs_};
  return {0.0, truncated_ ? decay_tail(decay_, R, 1) : 0.0};
}

VarianceProxies::Tail VarianceProxies::b2(std::size_t R) const {
  const std::size_t count = lambda_.size();
  if (R <= count) return {sq_suffix_[R], tail_sq_};
  return {0.0, truncated_ ? decay_tail(decay_, R, 2) : 0.0};
}

double VarianceProxies::weighted_tail(std::size_t R) const {
  const std::size_t count = lambda_.size();
  double v = 0.0;
  if (R <= count) v = w2_suffix_[R] + tail_w2_;
  else v = truncated_ ? weighted_tail_sum(decay_, growth_, R, 2) : 0.0;
  if (std::isnan(v)) throw ConfigError("kernel " + kernel_id_ + ": missing sup-norm data for the tail beyond K_max");
  return v;
}

double VarianceProxies::v2(std::size_t R) const {
  const double w = weighted_tail(R);
  const double bR = b(R).total();
  if (w == 0.0 || bR == 0.0) return 0.0;
  return w * bR;
}

double VarianceProxies::v3(std::size_t R) const {
  const std::size_t count = lambda_.size();
  double v = 0.0;
  if (R <= count) v = w1_suffix_[R] + tail_w1_;
  else v = truncated_ ? weighted_tail_sum(decay_, growth_, R, 1) : 0.0;
  if (std::isnan(v)) throw ConfigError("kernel " + kernel_id_ + ": missing sup-norm data for the tail beyond K_max");
  return v;
}

TailSums tail_sums(const SpectralKernel& kernel, std::size_t R) {
  const VarianceProxies p(kernel);
  return {p.b(R), p.b2(R)};
}

// --- noise terms ---------------------------------------------------------------

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

void check_r_below_n(std::size_t R, std::size_t n) {
  if (R < 1) throw ConfigError("truncation level R must be >= 1");
  if (R >= n)
    throw ConfigError("R = " + std::to_string(R) + " >= n = " + std::to_string(n) +
                      " (the concentration event requires R < n)");
}

}  // namespace

NoiseTerms noise_terms(const SpectralKernel& kernel, std::size_t n, std::size_t R, double alpha) {
  return noise_terms(VarianceProxies(kernel), n, R, alpha);
}

NoiseTerms noise_terms(const VarianceProxies& p, std::size_t n, std::size_t R, double alpha) {
  check_r_below_n(R, n);
  check_alpha(alpha);
  const double nn = static_cast<double>(n);
  NoiseTerms out;
  const double b2R = p.b2(R).total();
  const double bR = p.b(R).total();
  out.gamma1 = b2R == 0.0 ? 0.0 : std::sqrt(b2R * p.v1p(R) / nn);
  const double v2 = p.v2(R);
  out.gamma2 = bR + std::max(std::sqrt(v2 * bR / nn), v2 / nn);
  out.tau = std::sqrt(p.v1(R) * std::log(static_cast<double>(R) / alpha) / nn);
  return out;
}

double gram_bernstein_bound(double v1r, std::size_t R, std::size_t n, double alpha) {
  check_r_below_n(R, n);
  check_alpha(alpha);
  if (!(v1r >= 0.0)) throw ConfigError("V1(R) must be nonnegative");
  return std::sqrt(3.0 * v1r * std::log(2.0 * static_cast<double>(R) / alpha) / static_cast<double>(n));
}

std::size_t R_of_i(const SpectralKernel& kernel, std::size_t i) { return R_of_i(kernel, VarianceProxies(kernel), i); }

std::size_t R_of_i(const SpectralKernel& kernel, const VarianceProxies& p, std::size_t i) {
  const double li = std::abs(kernel.lambda(i));
  if (li == 0.0) throw ConfigError("R(i) is undefined for a zero eigenvalue (i = " + std::to_string(i) + ")");
  const std::size_t count = kernel.materialized();
  for (std::size_t R = 1; R <= count; ++R) {
    const double bR = p.b(R).total();
    if (std::isinf(bR))
      throw ConfigError("kernel " + kernel.id +
                        ": the eigenvalue tail sum diverges (summability fails), so R(i) does not exist");
    const double b2R = p.b2(R).total();
    // Strict inequality with a rounding margin, so exact ties (λ_k = 2^{-k}) do not pass.
    if (li > std::max(bR, std::sqrt(static_cast<double>(R) * b2R)) * (1.0 + 1e-12)) return R;
  }
  throw ConfigError("R(" + std::to_string(i) + ") scan reached K_max = " + std::to_string(count) +
                    " without satisfying the defining inequality; raise K_max");
}

Theorem1Result theorem1_bound(const SpectralKernel& kernel, std::size_t i, std::size_t n, double alpha) {
  return theorem1_bound(kernel, VarianceProxies(kernel), i, n, alpha);
}

Theorem1Result theorem1_bound(const SpectralKernel& kernel, const VarianceProxies& p, std::size_t i, std::size_t n,
                              double alpha) {
  check_alpha(alpha);
  if (n < 1) throw ConfigError("n must be >= 1");
  Theorem1Result out;
  out.i = i;
  out.lambda_i = kernel.lambda(i);
  if (out.lambda_i == 0.0) throw ConfigError("theorem1_bound: lambda_" + std::to_string(i) + " is zero");
  out.Ri = R_of_i(kernel, p, i);
  out.v1 = p.v1(out.Ri);
  const double nn = static_cast<double>(n);
  const double li = std::abs(out.lambda_i);
  out.envelope = li * std::sqrt(out.v1 * std::log(static_cast<double>(out.Ri) / alpha) / nn);
  if (out.Ri >= n) {
    out.pre_asymptotic = true;
    out.blocking = "R(i) = " + std::to_string(out.Ri) + " >= n";
    return out;
  }
  const NoiseTerms noise = noise_terms(p, n, out.Ri, alpha);
  out.gamma2 = noise.gamma2;
  out.tau = noise.tau;
  if (!(noise.gamma2 < li)) {
    out.pre_asymptotic = true;
    out.blocking = "gamma2(n, R(i)) = " + std::to_string(noise.gamma2) + " >= |lambda_i| = " + std::to_string(li);
  } else if (!(noise.tau < 0.5)) {
    out.pre_asymptotic = true;
    out.blocking = "tau = " + std::to_string(noise.tau) + " >= 1/2";
  }
  return out;
}

std::optional<std::size_t> theorem1_n0(const SpectralKernel& kernel, std::size_t i, double alpha) {
  const VarianceProxies p(kernel);
  const std::size_t Ri = R_of_i(kernel, p, i);
  const double li = std::abs(kernel.lambda(i));
  auto ok = [&](std::size_t n) {
    if (n <= Ri) return false;
    const NoiseTerms t = noise_terms(p, n, Ri, alpha);
    return t.gamma2 < li && t.tau < 0.5;
  };
  std::size_t hi = Ri + 1;
  constexpr std::size_t kCap = std::size_t{1} << 52;
  while (!ok(hi)) {
    if (hi >= kCap) return std::nullopt;
    hi *= 2;
  }
  std::size_t lo = std::max<std::size_t>(Ri + 1, hi / 2);
  if (ok(lo)) return lo;
  // invariant: !ok(lo), ok(hi)
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

// --- rate rows -------------------------------------------------------------------

RateRow theorem2_rate(const RegularityClass& reg, std::size_t i, std::size_t n) {
  const std::string violated = reg.constraint_violation();
  if (!violated.empty()) throw ConfigError(reg.describe() + " violates " + violated);
  if (i < 1 || i > n) throw ConfigError("theorem2_rate requires 1 <= i <= n");
  const double d = reg.delta;
  const double s = reg.s;
  const double ii = static_cast<double>(i);
  const double nn = static_cast<double>(n);
  const double root_n = 1.0 / std::sqrt(nn);
  RateRow row;
  switch (reg.tag) {
    case RegularityClass::Tag::H:
      throw ConfigError("theorem2_rate needs H1, H2 or H3; plain H has no rate row");
    case RegularityClass::Tag::H1: {
      if (reg.s == 0) {
        row.B = std::pow(ii, -d + 0.5) * root_n;
        row.regime = "H1(s=0): i^(-delta+1/2) n^(-1/2), 1 <= i <= n";
        return row;
      }
      const double first = std::pow(nn, (d - 1.0) / d / (2.0 * s + 1.0));
      const double second = std::pow(nn, 1.0 / (2.0 * s));
      if (ii <= first) {
        row.B = std::pow(ii, -d + d / (d - 1.0) * (s + 0.5)) * root_n;
        row.regime = "H1(s>=1): i^(-delta+delta/(delta-1)(s+1/2)) n^(-1/2), i <= n^((delta-1)/delta/(2s+1))";
      } else if (ii <= second) {
        row.B = std::pow(ii, -d + 1.0 + (d - 1.0) / d * (s + 0.5)) * root_n;
        row.regime = "H1(s>=1): i^(-delta+1+(delta-1)/delta(s+1/2)) n^(-1/2), n^((delta-1)/delta/(2s+1)) <= i <= n^(1/(2s))";
      } else {
        row.B = std::pow(ii, -d + s + 1.0) * root_n;
        row.regime = "H1(s>=1): i^(-delta+s+1) n^(-1/2), n^(1/(2s)) <= i <= n";
      }
      return row;
    }
    case RegularityClass::Tag::H2: {
      if (reg.s == 0) {
        row.B = std::exp(-d * ii + 0.5 * std::log(ii)) * root_n;
        row.regime = "H2(s=0): e^(-delta i + log(i)/2) n^(-1/2), 1 <= i <= n";
        return row;
      }
      if (ii <= std::pow(nn, 1.0 / (2.0 * s))) {
        row.B = std::exp(-d * ii + (s + 0.5) * std::log(ii)) * root_n;
        row.regime = "H2(s>=1): e^(-delta i + (s+1/2) log i) n^(-1/2), i <= n^(1/(2s))";
      } else {
        row.B = std::exp(-d * ii + s * std::log(ii)) * root_n;
        row.regime = "H2(s>=1): e^(-delta i + s log i) n^(-1/2), n^(1/(2s)) <= i <= n";
      }
      return row;
    }
    case RegularityClass::Tag::H3: {
      if (reg.s == 0)
        throw ConfigError("theorem2_rate: no row covers H3 with s = 0 (the table lists H3 only for s >= 1)");
      row.B = std::exp((-d + s) * ii) * root_n;
      row.regime = "H3(s>=1): e^((-delta+s) i) n^(-1/2), 1 <= i <= n";
      return row;
    }
  }
  throw ConfigError("theorem2_rate: unknown regularity class");
}

Rational rate_exponent(Rational delta, int s, Rational beta) {
  if (s < 0) throw ConfigError("rate_exponent: s must be >= 0");
  if (beta < Rational(0) || Rational(1) < beta) throw ConfigError("rate_exponent: beta must lie in [0, 1]");
  if (!(Rational(2 * s + 1) < delta)) throw ConfigError("rate_exponent: H1 requires delta > 2s+1");
  const Rational half(1, 2);
  if (s == 0) return beta * (-delta + half) - half;
  const Rational ss(s);
  const Rational first = (delta - Rational(1)) / delta / Rational(2 * s + 1);
  const Rational second = Rational(1, 2 * s);
  if (beta <= first) return beta * (-delta + delta / (delta - Rational(1)) * (ss + half)) - half;
  if (beta <= second) return beta * (-delta + Rational(1) + (delta - Rational(1)) / delta * (ss + half)) - half;
  return beta * (-delta + ss + Rational(1)) - half;
}

double rate_exponent(const RegularityClass& reg, double beta) {
  if (reg.tag != RegularityClass::Tag::H1) throw ConfigError("rate_exponent is defined for H1 only");
  return rate_exponent(Rational::from_double(reg.delta), reg.s, Rational::from_double(beta)).to_double();
}

BoundReport bound_report(const SpectralKernel& kernel, std::size_t n, double alpha, std::size_t i, std::size_t R,
                         const std::optional<RegularityClass>& regularity) {
  const VarianceProxies p(kernel);
  BoundReport r;
  r.kernel_id = kernel.id;
  r.i = i;
  r.n = n;
  r.alpha = alpha;
  r.k_max = kernel.limits.k_max;
  r.tail_model = kernel.truncated ? kernel.tail.describe() : "none (finite rank, fully materialized)";
  r.theorem1 = theorem1_bound(kernel, p, i, n, alpha);
  r.R = R == 0 ? r.theorem1.Ri : R;
  r.bR = p.b(r.R);
  r.b2R = p.b2(r.R);
  r.v1 = p.v1(r.R);
  r.v1p = p.v1p(r.R);
  r.v2 = p.v2(r.R);
  r.v3 = p.v3(r.R);
  r.noise = noise_terms(p, n, r.R, alpha);
  r.gram_bound = gram_bernstein_bound(r.v1, r.R, n, alpha);
  r.n0 = theorem1_n0(kernel, i, alpha);
  r.regularity = regularity;
  if (regularity) r.theorem2 = theorem2_rate(*regularity, i, n);
  return r;
}

}  // namespace kernspec
