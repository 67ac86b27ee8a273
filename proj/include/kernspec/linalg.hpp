#pragma once

// Dense symmetric linear algebra: storage types, a Householder + implicit QL
// eigensolver, spectrum ordering, the delta_2 metric and deterministic
// Weyl/Ostrowski checkers.

#include <cstddef>
#include <span>
#include <vector>

namespace kernspec::linalg {

/// Dense row-major rectangular matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const { return data_; }

  Matrix transpose() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
/// aᵀ·b without forming the transpose.
Matrix multiply_at_b(const Matrix& a, const Matrix& b);

/// Symmetric matrix stored as its packed lower triangle, so symmetry holds
/// by construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n, double fill = 0.0)
      : n_(n), lower_(n * (n + 1) / 2, fill) {}

  static SymMatrix identity(std::size_t n);
  /// Symmetrizes (a + aᵀ)/2; a must be square.
  static SymMatrix from_dense(const Matrix& a);
  static SymMatrix diagonal(std::span<const double> values);

  std::size_t order() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const { return lower_[index(i, j)]; }
  void set(std::size_t i, std::size_t j, double v) { lower_[index(i, j)] = v; }
  double& at_lower(std::size_t i, std::size_t j) { return lower_[index(i, j)]; }

  Matrix to_dense() const;
  bool all_finite() const;
  double max_abs() const;
  double trace() const;

  SymMatrix operator-(const SymMatrix& other) const;
  SymMatrix operator+(const SymMatrix& other) const;

 private:
  static std::size_t index(std::size_t i, std::size_t j) {
    return i >= j ? i * (i + 1) / 2 + j : j * (j + 1) / 2 + i;
  }

  std::size_t n_ = 0;
  std::vector<double> lower_;
};

/// Eigenvalues sorted by decreasing absolute value. `order[k]` is the sorted
/// position of the k-th input value. Ties in |λ| put the positive value
/// first, then the lower original index.
struct Spectrum {
  std::vector<double> values;
  std::vector<std::size_t> order;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

Spectrum sort_by_magnitude(std::span<const double> values);

struct EigenDecomposition {
  Spectrum spectrum;
  /// Column i is the unit eigenvector for spectrum.values[i].
  Matrix vectors;
};

/// Full eigendecomposition via Householder tridiagonalization and
/// implicit-shift QL. Throws NumericalError on non-finite input or when an
/// eigenvalue fails to converge within the iteration cap.
EigenDecomposition eig_sym(const SymMatrix& m);

/// Eigenvalues only; roughly a third of the work of eig_sym.
Spectrum eigenvalues(const SymMatrix& m);

/// The k eigenvalues of largest magnitude by Lanczos with full
/// reorthogonalization. An exhausted Krylov space is continued from a fresh
/// orthogonal start vector, so low-rank matrices come out exactly (the
/// missing eigenvalues are zeros). Small problems fall back to eigenvalues().
Spectrum top_eigenvalues(const SymMatrix& m, std::size_t k);

struct TridiagonalEigen {
  std::vector<double> values;            ///< ascending
  std::vector<double> first_components;  ///< first row of the eigenvector matrix
};

/// Symmetric tridiagonal eigenproblem tracking only the first component of
/// every eigenvector (what Golub-Welsch needs). `off[i]` couples i and i+1.
TridiagonalEigen tridiagonal_eigen(std::span<const double> diag, std::span<const double> off);

/// Largest singular value, max |λ_i|.
double op_norm(const SymMatrix& m);
double op_norm(const Matrix& square_symmetric);

/// Permutation-minimal ℓ₂ distance between two spectra, the shorter one
/// zero-padded. Sorting both by signed value is optimal (rearrangement
/// inequality).
double delta2(std::span<const double> a, std::span<const double> b);
inline double delta2(const Spectrum& a, const Spectrum& b) { return delta2(a.values, b.values); }

struct PerturbationCheck {
  double max_gap = 0.0;      ///< max_i |λ_i(perturbed) − λ_i(reference)|
  double bound = 0.0;        ///< right-hand side (max over i for Ostrowski)
  double max_slack = 0.0;    ///< min_i (bound_i − gap_i); negative means a violation
  bool holds = true;
  /// Same gap computed under strict decreasing-|λ| pairing, reported only.
  double magnitude_order_gap = 0.0;
};

/// Multiplicative (Ostrowski) check: for S (n×R) and Λ = diag(lambda),
/// |λ_i(SΛSᵀ) − λ_i(Λ)| ≤ |λ_i(Λ)|·‖SᵀS − Id‖ for all i, where both
/// spectra are zero-padded to n and partners are matched by signed-value
/// rank before being reported in decreasing-|λ| order of Λ.
PerturbationCheck ostrowski_gap(const Matrix& s, std::span<const double> lambda);

/// Additive (Weyl) check: max_i |λ_i(A) − λ_i(B)| ≤ ‖A − B‖ under
/// signed-value pairing.
PerturbationCheck weyl_gap(const SymMatrix& a, const SymMatrix& b);

/// R factor of a thin Householder QR of an n×r matrix (n ≥ r).
Matrix thin_r_factor(const Matrix& phi);

/// Spectrum of ΦΛΦᵀ (n×n) computed through the r×r matrix RΛRᵀ where
/// Φ = QR; the n − r trailing eigenvalues are exact zeros.
Spectrum factored_spectrum(const Matrix& phi, std::span<const double> lambda);

/// Solves the SPD system g·x = b in place by Cholesky; throws NumericalError
/// when a pivot is ≤ `min_pivot`.
void cholesky_solve(const Matrix& g, Matrix& b, double min_pivot);

}  // namespace kernspec::linalg
