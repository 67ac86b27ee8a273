#include "kernspec/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "kernspec/errors.hpp"
#include "kernspec/linalg.hpp"

namespace kernspec::specfun {

GegenbauerParam::GegenbauerParam(double gamma) : gamma_(gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ConfigError("Gegenbauer index must be positive, got " + std::to_string(gamma));
}

GegenbauerParam GegenbauerParam::from_dimension(int d) {
  if (d < 3) throw ConfigError("sphere dimension d must be >= 3, got " + std::to_string(d));
  return GegenbauerParam(0.5 * (d - 2));
}

double pochhammer_rising(double a, int l) {
  if (l < 0) throw ConfigError("pochhammer_rising: l must be nonnegative");
  double p = 1.0;
  for (int k = 0; k < l; ++k) p *= a + k;
  return p;
}

double gegenbauer_eval(GegenbauerParam param, int l, double t) {
  if (l < 0) throw ConfigError("gegenbauer_eval: degree must be nonnegative");
  if (!(std::abs(t) <= 1.0 + 1e-12))
    throw ConfigError("gegenbauer_eval: argument outside [-1, 1]");
  const double g = param.gamma();
  double prev = 1.0;
  if (l == 0) return prev;
  double cur = 2.0 * g * t;
  for (int k = 2; k <= l; ++k) {
    const double next = (2.0 * t * (k + g - 1.0) * cur - (k + 2.0 * g - 2.0) * prev) / k;
    prev = cur;
    cur = next;
  }
  return cur;
}

double gegenbauer_endpoint(GegenbauerParam param, int l) {
  if (l < 0) throw ConfigError("gegenbauer_endpoint: degree must be nonnegative");
  const double two_g = 2.0 * param.gamma();
  double v = 1.0;
  for (int k = 0; k < l; ++k) v *= (two_g + k) / (k + 1.0);
  return v;
}

double gegenbauer_weight_mass(GegenbauerParam param) {
  const double g = param.gamma();
  return std::sqrt(std::numbers::pi) * std::exp(std::lgamma(g + 0.5) - std::lgamma(g + 1.0));
}

double gegenbauer_l2_norm(GegenbauerParam param, int l) {
  const double g = param.gamma();
  // c_γ = 2^{-2γ} Γ(2γ+1) / Γ(γ+1/2)²
  const double log_c = -2.0 * g * std::numbers::ln2 + std::lgamma(2.0 * g + 1.0) -
                       2.0 * std::lgamma(g + 0.5);
  const double sq = g / (l + g) * gegenbauer_endpoint(param, l) * std::exp(-log_c);
  return std::sqrt(sq);
}

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("harmonic dimension overflows 64 bits");
  return r;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("harmonic dimension overflows 64 bits");
  return r;
}

// C(n, k) exactly; every intermediate C(n-k+i, i) is an integer.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t factor = n - k + i;
    // r * factor / i, reduced first to keep intermediates small
    const std::uint64_t g1 = std::gcd(r, i);
    const std::uint64_t r1 = r / g1;
    const std::uint64_t i1 = i / g1;
    const std::uint64_t g2 = std::gcd(factor, i1);
    r = checked_mul(r1, factor / g2);
    // i1 / g2 == 1 because C(n-k+i, i) is integral and gcd(r1, i1) = 1
  }
  return r;
}

}  // namespace

std::uint64_t harmonic_dim(int d, int l) {
  if (d < 3) throw ConfigError("harmonic_dim: d must be >= 3");
  if (l < 0) throw ConfigError("harmonic_dim: l must be nonnegative");
  if (l == 0) return 1;
  if (l == 1) return static_cast<std::uint64_t>(d);
  const std::uint64_t a = binomial(static_cast<std::uint64_t>(l + d - 1), static_cast<std::uint64_t>(l));
  const std::uint64_t b = binomial(static_cast<std::uint64_t>(l + d - 3), static_cast<std::uint64_t>(l - 2));
  return a - b;
}

std::uint64_t cumulative_harmonic_dim(int d, int max_level) {
  if (max_level < 0) throw ConfigError("cumulative_harmonic_dim: L must be nonnegative");
  std::uint64_t total = 0;
  for (int l = 0; l <= max_level; ++l) total = checked_add(total, harmonic_dim(d, l));
  return total;
}

double zonal_eval(int d, int l, double s) {
  const GegenbauerParam p = GegenbauerParam::from_dimension(d);
  const double c = (2.0 * l + d - 2.0) / (d - 2.0);
  return c * gegenbauer_eval(p, l, s);
}

QuadratureRule gauss_jacobi_rule(GegenbauerParam param, int order) {
  if (order < 1) throw ConfigError("gauss_jacobi_rule: order must be >= 1");
  const double g = param.gamma();
  const auto n = static_cast<std::size_t>(order);
  std::vector<double> diag(n, 0.0);
  std::vector<double> off(n > 0 ? n - 1 : 0);
  // Monic recurrence for the Gegenbauer weight: β_k = k(k+2γ-1) / (4(k+γ)(k+γ-1)).
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double k = static_cast<double>(i + 1);
    off[i] = std::sqrt(k * (k + 2.0 * g - 1.0) / (4.0 * (k + g) * (k + g - 1.0)));
  }
  const linalg::TridiagonalEigen eig = linalg::tridiagonal_eigen(diag, off);
  const double mass = gegenbauer_weight_mass(param);
  QuadratureRule rule;
  rule.order = order;
  rule.nodes = eig.values;
  rule.weights.resize(n);
  for (std::size_t k = 0; k < n; ++k) rule.weights[k] = mass * eig.first_components[k] * eig.first_components[k];
  // The tridiagonal matrix has zero diagonal, so nodes are symmetric about 0.
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double x = 0.5 * (rule.nodes[n - 1 - k] - rule.nodes[k]);
    const double w = 0.5 * (rule.weights[n - 1 - k] + rule.weights[k]);
    rule.nodes[k] = -x;
    rule.nodes[n - 1 - k] = x;
    rule.weights[k] = w;
    rule.weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

double hermite_eval(int k, double x) {
  if (k < 0) throw ConfigError("hermite_eval: degree must be nonnegative");
  double prev = 1.0;
  if (k == 0) return prev;
  double cur = 2.0 * x;
  for (int j = 1; j < k; ++j) {
    const double next = 2.0 * x * cur - 2.0 * j * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

void gaussian_eigenfunctions(int count, double x, GaussianVariant variant, double* out) {
  if (count <= 0) return;
  const double a = variant == GaussianVariant::narrow ? 1.0 / std::numbers::sqrt2
                                                      : 0.5 * (std::numbers::sqrt2 - 1.0);
  const double y = std::pow(2.0, 0.25) * x;
  const double lead = std::pow(2.0, 0.125);
  // h_k = e^{-a x²} H_k(y) / sqrt(2^k k!):
  // h_{k+1} = sqrt(2/(k+1)) y h_k − sqrt(k/(k+1)) h_{k−1}
  double prev = std::exp(-a * x * x);
  out[0] = lead * prev;
  if (count == 1) return;
  double cur = std::numbers::sqrt2 * y * prev;
  out[1] = lead * cur;
  for (int k = 1; k + 1 < count; ++k) {
    const double next = std::sqrt(2.0 / (k + 1.0)) * y * cur - std::sqrt(k / (k + 1.0)) * prev;
    prev = cur;
    cur = next;
    out[k + 1] = lead * cur;
  }
}

double gaussian_eigenfunction(int k, double x, GaussianVariant variant) {
  if (k < 0) throw ConfigError("gaussian_eigenfunction: index must be nonnegative");
  std::vector<double> values(static_cast<std::size_t>(k) + 1);
  gaussian_eigenfunctions(k + 1, x, variant, values.data());
  return values.back();
}

double beta_function(double a, double b) {
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

}  // namespace kernspec::specfun
