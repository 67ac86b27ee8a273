#pragma once

// Sampling, kernel-matrix assembly, the truncation decomposition
// T_n = Φ_R Λ_R Φ_Rᵀ + E_R and W-random graph generation.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "kernspec/kernelmodel.hpp"
#include "kernspec/linalg.hpp"

namespace kernspec {

struct SampleSet {
  Domain domain;
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> coords;  ///< n × dim, row-major
  std::uint64_t seed = 0;

  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

/// Uniform points on S^{d-1} (normalized Gaussian vectors) or draws from
/// N(0, 1/2) on the line, whose density is e^{-x²}/√π.
SampleSet sample_points(const Domain& domain, std::size_t n, std::uint64_t seed);

/// One point per row, comma separated, shortest round-trip formatting.
void write_samples_csv(const SampleSet& sample, std::ostream& out);

/// (T_n)_ij = W(X_i, X_j)/n including the diagonal. Sphere kernels use their
/// profile; other kernels use the materialized expansion. Throws
/// NumericalError naming the pair on a non-finite entry.
linalg::SymMatrix kernel_matrix(const SpectralKernel& kernel, const SampleSet& sample);

/// Φ_K with columns (1/√n)(φ_k(X_1), …, φ_k(X_n)), k = 1..K in flat order.
linalg::Matrix basis_matrix(const SpectralKernel& kernel, const SampleSet& sample, std::size_t count);

struct DecomposeOptions {
  /// ‖E_R‖_op and ‖A‖_op need eigenvalues of n×n or 2R×2R matrices; the
  /// Gram deviation alone is much cheaper.
  bool residual_norms = true;
};

struct TruncationDecomposition {
  std::size_t R = 0;
  linalg::Matrix phi;           ///< n × R
  std::vector<double> lambda;   ///< λ_1..λ_R
  linalg::SymMatrix er;         ///< T_n − Φ_R Λ_R Φ_Rᵀ
  double gram_dev = 0.0;        ///< ‖Φ_RᵀΦ_R − Id_R‖_op
  double gram_min_eigenvalue = 1.0;
  double er_max = 0.0;          ///< max |(E_R)_ij|
  double er_norm = 0.0;         ///< ‖E_R‖_op
  double a_norm = 0.0;          ///< ‖A‖_op, A = P1 E P2 + P2 E P1 + P1 E P1
  double p2ep2_norm = 0.0;      ///< ‖P2 E_R P2‖_op
  double span_residual = 0.0;   ///< max over unit φ ∈ span(Φ_R) of ‖E_R φ‖
  bool residual_norms = false;
};

/// Throws ConfigError when R > min(n, K_max) and NumericalError when Φ_R is
/// numerically rank deficient (smallest eigenvalue of Φ_RᵀΦ_R ≤ 1e-10).
TruncationDecomposition decompose(const SpectralKernel& kernel, const SampleSet& sample, std::size_t R,
                                  const DecomposeOptions& options = {});
/// Same, reusing an already assembled T_n.
TruncationDecomposition decompose(const SpectralKernel& kernel, const SampleSet& sample,
                                  const linalg::SymMatrix& tn, std::size_t R, const DecomposeOptions& options = {});

/// Symmetric 0/1 adjacency with zero diagonal, stored densely.
struct Adjacency {
  std::size_t n = 0;
  std::vector<std::uint8_t> bits;  ///< n × n

  bool operator()(std::size_t i, std::size_t j) const { return bits[i * n + j] != 0; }
  std::size_t edges() const;
  double density() const;  ///< edges / (n(n−1)/2)
};

/// A_ij ~ Bernoulli(W(X_i, X_j)) independently for i < j. Throws ConfigError
/// naming the pair when a probability leaves [0, 1].
Adjacency sample_adjacency(const SpectralKernel& kernel, const SampleSet& sample, std::uint64_t seed);

struct OrthonormalityDiagnostic {
  double max_offdiag = 0.0;  ///< max_{j≠k} |(Φ_KᵀΦ_K)_jk|
  double max_diag = 0.0;     ///< max_k |(Φ_KᵀΦ_K)_kk − 1|
  double max_abs() const { return max_offdiag > max_diag ? max_offdiag : max_diag; }
};

OrthonormalityDiagnostic orthonormality_diagnostic(const SpectralKernel& kernel, const SampleSet& sample,
                                                   std::size_t count);

}  // namespace kernspec
