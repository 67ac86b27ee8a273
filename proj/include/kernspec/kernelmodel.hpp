#pragma once

// Kernel representations: spectral kernels (eigenvalues + eigenfunctions),
// dot-product kernels on S^{d-1} with eigenvalues from Gegenbauer
// quadrature, the named kernel library, m-fold composition and regularity
// classification.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kernspec {

enum class DomainKind { sphere, gaussian_line, abstract };

struct Domain {
  DomainKind kind = DomainKind::abstract;
  int dimension = 0;  ///< ambient d for spheres, 1 for the line, 0 otherwise

  /// Number of coordinates per sample point.
  std::size_t point_size() const;
  std::string describe() const;
};

/// Upper model for a sequence beyond its materialized prefix:
/// scale·k^{-rate} (polynomial) or scale·e^{-rate·k} (exponential).
struct DecayModel {
  enum class Kind { none, polynomial, exponential };
  Kind kind = Kind::none;
  double scale = 0.0;
  double rate = 0.0;

  double at(double k) const;
  std::string describe() const;
};

/// Growth model for ‖φ_k‖_∞ beyond the materialized prefix:
/// scale·k^{rate} or scale·e^{rate·k}.
struct GrowthModel {
  enum class Kind { none, polynomial, exponential };
  Kind kind = Kind::none;
  double scale = 0.0;
  double rate = 0.0;

  double at(double k) const;
  std::string describe() const;
};

/// An orthonormal eigenbasis that can be evaluated at sample points.
/// Indices are basis-native (see each implementation).
class EigenBasis {
 public:
  virtual ~EigenBasis() = default;
  /// out[m] = φ_{indices[m]}(point).
  virtual void evaluate(std::span<const double> point, std::span<const std::size_t> indices,
                        std::span<double> out) const = 0;
};

struct MaterializationLimits {
  std::size_t k_max = 5000;
  int l_max = 60;
};

/// W = Σ_k λ_k φ_k ⊗ φ_k with eigenvalues materialized (flat index, 0-based
/// here, decreasing |λ|) up to a cutoff.
struct SpectralKernel {
  std::string id;
  Domain domain;

  std::vector<double> eigenvalues;
  std::vector<std::size_t> basis_index;  ///< basis-native index of each flat eigenvalue
  std::vector<int> levels;               ///< harmonic level per flat index (spheres), else -1
  std::vector<double> sup_norms;         ///< upper bounds on ‖φ_k‖_∞
  std::vector<double> v1_prefix;         ///< v1_prefix[R] ≥ ‖Σ_{k<R} φ_k²‖_∞, exact where noted
  std::string sup_norm_source;

  DecayModel tail;          ///< |λ_k| beyond the materialized prefix
  GrowthModel sup_growth;   ///< ‖φ_k‖_∞ beyond the materialized prefix
  bool truncated = false;   ///< eigenvalues exist beyond the materialized prefix
  bool finite_rank = false;
  std::size_t rank = 0;     ///< number of nonzero eigenvalues when finite_rank
  bool satisfies_h = true;  ///< Σ|λ_k|‖φ_k‖²_∞ < ∞
  bool orthonormal_basis = true;
  std::vector<std::string> flags;

  std::shared_ptr<const EigenBasis> basis;
  /// Sphere kernels: W(x, y) = profile(⟨x, y⟩).
  std::function<double(double)> profile;
  /// Sphere kernels: λ*_l per harmonic level l = 0..L_max.
  std::vector<double> level_eigenvalues;
  /// Known p with |λ*_l| ~ l^{-p} (spheres), used for the flat tail model.
  std::optional<double> level_decay_exponent;
  MaterializationLimits limits;

  std::size_t materialized() const { return eigenvalues.size(); }
  /// λ_i with the 1-based flat index used throughout the bounds.
  double lambda(std::size_t i) const;
};

/// W(x, y) = f(⟨x, y⟩) on S^{d-1}.
struct DotProductKernel {
  std::string id;
  int dimension = 3;
  std::function<double(double)> profile;
  /// Points in (-1, 1) where f is not smooth; quadrature splits there.
  std::vector<double> breakpoints;
  /// λ*_l for l = 0..max_level (closed form or quadrature).
  std::vector<double> star_eigenvalues;
  int max_level = 60;
  bool finite_rank = false;
  bool satisfies_h = true;
  /// Known exponent p in |λ*_l| ~ l^{-p}, when the profile's asymptotics are
  /// known; otherwise the flat tail is fitted.
  std::optional<double> level_decay_exponent;
};

struct RegularityClass {
  enum class Tag { H, H1, H2, H3 };
  Tag tag = Tag::H1;
  double delta = 0.0;
  int s = 0;

  /// Checks δ > 2s+1 (H1), δ > s (H2), δ > 2s (H3); returns the violated
  /// inequality or an empty string.
  std::string constraint_violation() const;
  std::string describe() const;
};

std::string to_string(RegularityClass::Tag tag);
RegularityClass::Tag regularity_tag_from_string(const std::string& s);

/// Kernel specification accepted by named_kernel.
struct KernelSpec {
  enum class Family { constant, linear, threshold, logistic, gaussian_narrow, gaussian_wide, custom, synthetic };
  Family family = Family::constant;
  double p0 = 0.5;
  double p1 = 0.0;
  double r = 1.0;
  int d = 3;
  int compose = 1;
  /// custom: piecewise-linear profile table (t, f(t)), t increasing over [-1, 1].
  std::vector<std::pair<double, double>> table;
  /// synthetic: λ_k = scale·k^{-δ} (polynomial) or scale·e^{-δk}; ‖φ_k‖_∞ = k^s or e^{sk}.
  RegularityClass synthetic{RegularityClass::Tag::H1, 4.0, 0};
  double synthetic_scale = 1.0;
  MaterializationLimits limits;
};

std::string to_string(KernelSpec::Family family);
KernelSpec::Family family_from_string(const std::string& s);

/// λ*_l = (c_l b_d / d_l) ∫ f G_l^γ ϱ_γ dt with adaptive order doubling
/// starting at `order`. Throws NumericalError if the doubling does not
/// settle below 1e-10 by the maximum order.
double eigenvalue_quadrature(const DotProductKernel& kernel, int l, int order = 32);

/// λ*_l for l = 0..max_level sharing one sequence of quadrature rules.
std::vector<double> star_eigenvalues_by_quadrature(const DotProductKernel& kernel, int max_level,
                                                   int order = 32);

/// Closed-form spectrum of f(t) = 1{t ≥ 0}.
double threshold_eigenvalue(int d, int l);

/// Builds the dot-product description of a sphere family (constant, linear,
/// threshold, logistic, custom).
DotProductKernel dot_product_kernel(const KernelSpec& spec);

/// Flat, multiplicity-expanded spectral view of a dot-product kernel.
SpectralKernel to_spectral(const DotProductKernel& kernel, const MaterializationLimits& limits);

/// Named kernel library, including the composition power in spec.compose.
SpectralKernel named_kernel(const KernelSpec& spec);

/// Same eigenfunctions, eigenvalues raised to the m-th power and re-sorted.
SpectralKernel compose_power(const SpectralKernel& kernel, int m);

struct RegularityFit {
  RegularityClass best;
  double polynomial_delta = 0.0;
  double polynomial_residual = 0.0;
  double exponential_delta = 0.0;
  double exponential_residual = 0.0;
  std::size_t first_index = 0;  ///< 1-based
  std::size_t last_index = 0;
  std::size_t points = 0;
  bool constraints_ok = true;
  std::string note;
};

/// Least-squares fits of log|λ_i| against log i and against i over the
/// 1-based index window [first, last] (last = 0 means all materialized).
RegularityFit classify_regularity(const SpectralKernel& kernel, std::span<const RegularityClass> candidates,
                                  std::size_t first = 1, std::size_t last = 0);

/// δ = (p + ε)/(d − 1) + 1/2.
double sobolev_to_delta(double p, int d, double epsilon);

// Sphere eigenbasis built from zonal harmonics (see sphere_basis.cpp).
std::shared_ptr<const EigenBasis> make_sphere_basis(int d);
/// Basis-native index of (level, within-level index) for the sphere basis.
std::size_t sphere_native_index(int d, int level, std::size_t within);

}  // namespace kernspec
