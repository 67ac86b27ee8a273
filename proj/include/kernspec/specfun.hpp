#pragma once

// Special functions behind dot-product kernel spectra on S^{d-1}:
// Gegenbauer polynomials, spherical-harmonic dimensions, zonal harmonics,
// Gauss-Jacobi quadrature and the Hermite functions of the Gaussian kernel.

#include <cstdint>
#include <vector>

namespace kernspec::specfun {

/// Gegenbauer index γ > 0. On S^{d-1} it is γ = (d-2)/2.
class GegenbauerParam {
 public:
  explicit GegenbauerParam(double gamma);
  static GegenbauerParam from_dimension(int d);

  double gamma() const { return gamma_; }

 private:
  double gamma_;
};

/// Nodes and weights for ∫_{-1}^{1} g(t) (1-t²)^{γ-1/2} dt.
struct QuadratureRule {
  std::vector<double> nodes;    ///< strictly increasing, inside (-1, 1)
  std::vector<double> weights;  ///< positive
  int order = 0;

  template <typename F>
  double integrate(F&& g) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) sum += weights[k] * g(nodes[k]);
    return sum;
  }
};

/// a(a+1)…(a+l-1); 1 for l = 0.
double pochhammer_rising(double a, int l);

/// G_l^γ(t) by the three-term recurrence. Throws ConfigError for l < 0 or
/// |t| > 1.
double gegenbauer_eval(GegenbauerParam param, int l, double t);

/// G_l^γ(1) = (2γ)^{(l)} / l!.
double gegenbauer_endpoint(GegenbauerParam param, int l);

/// ∫_{-1}^{1} (1-t²)^{γ-1/2} dt = √π Γ(γ+1/2) / Γ(γ+1).
double gegenbauer_weight_mass(GegenbauerParam param);

/// ‖G_l^γ‖_{2,γ} from the closed orthogonality relation.
double gegenbauer_l2_norm(GegenbauerParam param, int l);

/// Dimension d_l of the degree-l spherical harmonics on S^{d-1}, in exact
/// integer arithmetic. Throws std::overflow_error if it exceeds 64 bits.
std::uint64_t harmonic_dim(int d, int l);

/// κ(L) = Σ_{l≤L} d_l.
std::uint64_t cumulative_harmonic_dim(int d, int max_level);

/// Z_l as a function of s = ⟨x, y⟩: c_l G_l^γ(s), c_l = (2l+d-2)/(d-2).
double zonal_eval(int d, int l, double s);

/// Gauss quadrature for the weight (1-t²)^{γ-1/2} (Golub-Welsch). Exact
/// for polynomials of degree ≤ 2·order−1.
QuadratureRule gauss_jacobi_rule(GegenbauerParam param, int order);

/// Physicists' Hermite polynomial H_k(x).
double hermite_eval(int k, double x);

enum class GaussianVariant { narrow, wide };

/// 2^{1/8} (2^k k!)^{-1/2} e^{-a x²} H_k(2^{1/4} x) with a = 1/√2 (narrow)
/// or a = (√2−1)/2 (wide). The normalization is carried through the
/// recurrence so 2^k k! is never formed.
double gaussian_eigenfunction(int k, double x, GaussianVariant variant);

/// φ_0..φ_{count-1} at x in one recurrence pass.
void gaussian_eigenfunctions(int count, double x, GaussianVariant variant, double* out);

/// Beta(a, b) = Γ(a)Γ(b)/Γ(a+b), through log-gamma.
double beta_function(double a, double b);

}  // namespace kernspec::specfun
