#include "kernspec/montecarlo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "kernspec/errors.hpp"
#include "kernspec/rng.hpp"

namespace kernspec {

using linalg::Matrix;
using linalg::SymMatrix;

SampleSet sample_points(const Domain& domain, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample_points: n must be >= 1");
  SampleSet s;
  s.domain = domain;
  s.n = n;
  s.seed = seed;
  SplitMix64 rng(seed);
  switch (domain.kind) {
    case DomainKind::sphere: {
      const auto d = static_cast<std::size_t>(domain.dimension);
      if (d < 3) throw ConfigError("sample_points: sphere dimension must be >= 3");
      s.dim = d;
      s.coords.resize(n * d);
      for (std::size_t i = 0; i < n; ++i) {
        double* x = &s.coords[i * d];
        double norm = 0.0;
        while (norm == 0.0) {
          for (std::size_t k = 0; k < d; ++k) {
            x[k] = rng.normal();
            norm += x[k] * x[k];
          }
        }
        norm = std::sqrt(norm);
        for (std::size_t k = 0; k < d; ++k) x[k] /= norm;
      }
      break;
    }
    case DomainKind::gaussian_line: {
      s.dim = 1;
      s.coords.resize(n);
      const double sd = std::sqrt(0.5);
      for (std::size_t i = 0; i < n; ++i) s.coords[i] = sd * rng.normal();
      break;
    }
    case DomainKind::abstract:
      throw ConfigError("sample_points: kernels on an abstract domain cannot be sampled");
  }
  return s;
}

void write_samples_csv(const SampleSet& sample, std::ostream& out) {
  for (std::size_t k = 0; k < sample.dim; ++k) out << (k ? "," : "") << "x" << k;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < sample.n; ++i) {
    for (std::size_t k = 0; k < sample.dim; ++k) {
      const auto res = std::to_chars(buf, buf + sizeof buf, sample.coords[i * sample.dim + k]);
      if (k) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

namespace {

double inner(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void require_same_domain(const SpectralKernel& kernel, const SampleSet& sample) {
  if (kernel.domain.kind != sample.domain.kind || kernel.domain.dimension != sample.domain.dimension)
    throw ConfigError("sample domain " + sample.domain.describe() + " does not match kernel domain " +
                      kernel.domain.describe());
}

// Orthonormal basis of the column span (modified Gram-Schmidt, applied
// twice); columns that vanish relative to their input norm are dropped.
Matrix orthonormal_columns(const Matrix& b) {
  const std::size_t n = b.rows();
  std::vector<std::vector<double>> basis;
  std::vector<double> v(n);
  for (std::size_t c = 0; c < b.cols(); ++c) {
    double norm0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = b(i, c);
      norm0 += v[i] * v[i];
    }
    norm0 = std::sqrt(norm0);
    if (norm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) {
        const double proj = inner(q, v);
        for (std::size_t i = 0; i < n; ++i) v[i] -= proj * q[i];
      }
    double norm = std::sqrt(inner(v, v));
    if (norm <= 1e-10 * norm0) continue;
    for (double& x : v) x /= norm;
    basis.push_back(v);
  }
  Matrix q(n, basis.size());
  for (std::size_t c = 0; c < basis.size(); ++c)
    for (std::size_t i = 0; i < n; ++i) q(i, c) = basis[c][i];
  return q;
}

// Largest singular value of a rectangular matrix via its Gram matrix.
double spectral_norm(const Matrix& m) {
  if (m.cols() == 0 || m.rows() == 0) return 0.0;
  const Matrix g = linalg::multiply_at_b(m, m);
  return std::sqrt(std::max(0.0, linalg::op_norm(SymMatrix::from_dense(g))));
}

Matrix dense_times(const SymMatrix& e, const Matrix& x) {
  const std::size_t n = e.order();
  Matrix out(n, x.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double eik = e(i, k);
      if (eik == 0.0) continue;
      for (std::size_t c = 0; c < x.cols(); ++c) out(i, c) += eik * x(k, c);
    }
  return out;
}

}  // namespace

Matrix basis_matrix(const SpectralKernel& kernel, const SampleSet& sample, std::size_t count) {
  require_same_domain(kernel, sample);
  if (count > kernel.materialized())
    throw ConfigError("basis_matrix: " + std::to_string(count) + " functions requested but only " +
                      std::to_string(kernel.materialized()) + " are materialized");
  if (count > 0 && !kernel.basis) throw ConfigError("kernel " + kernel.id + " has no eigenfunction evaluator");
  Matrix phi(sample.n, count);
  if (count == 0) return phi;
  const std::span<const std::size_t> indices(kernel.basis_index.data(), count);
  const double scale = 1.0 / std::sqrt(static_cast<double>(sample.n));
  for (std::size_t i = 0; i < sample.n; ++i) {
    auto row = phi.row(i);
    kernel.basis->evaluate(sample.point(i), indices, row);
    for (double& v : row) v *= scale;
  }
  return phi;
}

SymMatrix kernel_matrix(const SpectralKernel& kernel, const SampleSet& sample) {
  require_same_domain(kernel, sample);
  const std::size_t n = sample.n;
  const double inv_n = 1.0 / static_cast<double>(n);
  SymMatrix t(n);
  if (kernel.profile) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = sample.point(i);
      for (std::size_t j = 0; j <= i; ++j) {
        const double s = std::clamp(inner(xi, sample.point(j)), -1.0, 1.0);
        const double v = kernel.profile(s) * inv_n;
        if (!std::isfinite(v))
          throw NumericalError("kernel matrix entry (" + std::to_string(i) + ", " + std::to_string(j) +
                               ") is not finite");
        t.set(i, j, v);
      }
    }
    return t;
  }
  const std::size_t count = kernel.materialized();
  const Matrix phi = basis_matrix(kernel, sample, count);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pi = phi.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const auto pj = phi.row(j);
      double v = 0.0;
      for (std::size_t k = 0; k < count; ++k) v += kernel.eigenvalues[k] * pi[k] * pj[k];
      if (!std::isfinite(v))
        throw NumericalError("kernel matrix entry (" + std::to_string(i) + ", " + std::to_string(j) +
                             ") is not finite");
      t.set(i, j, v);
    }
  }
  return t;
}

TruncationDecomposition decompose(const SpectralKernel& kernel, const SampleSet& sample, std::size_t R,
                                  const DecomposeOptions& options) {
  return decompose(kernel, sample, kernel_matrix(kernel, sample), R, options);
}

TruncationDecomposition decompose(const SpectralKernel& kernel, const SampleSet& sample, const SymMatrix& tn,
                                  std::size_t R, const DecomposeOptions& options) {
  const std::size_t n = sample.n;
  if (tn.order() != n) throw ConfigError("decompose: T_n order does not match the sample");
  if (R > n || R > kernel.materialized())
    throw ConfigError("decompose: R = " + std::to_string(R) + " exceeds min(n, K_max) = " +
                      std::to_string(std::min(n, kernel.materialized())));
  TruncationDecomposition out;
  out.R = R;
  out.residual_norms = options.residual_norms;
  out.phi = basis_matrix(kernel, sample, R);
  out.lambda.assign(kernel.eigenvalues.begin(), kernel.eigenvalues.begin() + static_cast<std::ptrdiff_t>(R));

  out.er = tn;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pi = out.phi.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const auto pj = out.phi.row(j);
      double v = 0.0;
      for (std::size_t k = 0; k < R; ++k) v += out.lambda[k] * pi[k] * pj[k];
      out.er.at_lower(i, j) -= v;
    }
  }
  out.er_max = out.er.max_abs();

  if (R == 0) {
    // E_0 = T_n, P1 = 0, A = 0
    out.gram_dev = 0.0;
    if (options.residual_norms) {
      out.er_norm = linalg::op_norm(out.er);
      out.p2ep2_norm = out.er_norm;
    }
    return out;
  }

  Matrix gram = linalg::multiply_at_b(out.phi, out.phi);
  const SymMatrix gram_sym = SymMatrix::from_dense(gram);
  const linalg::Spectrum gram_eigs = linalg::eigenvalues(gram_sym);
  double min_eig = gram_eigs.values.front();
  for (double v : gram_eigs.values) min_eig = std::min(min_eig, v);
  out.gram_min_eigenvalue = min_eig;
  for (std::size_t k = 0; k < R; ++k) gram(k, k) -= 1.0;
  out.gram_dev = linalg::op_norm(SymMatrix::from_dense(gram));
  if (!(min_eig > 1e-10))
    throw NumericalError("decompose: Phi_R is rank deficient (smallest eigenvalue of Phi_R^T Phi_R = " +
                         std::to_string(min_eig) + ")");
  if (!options.residual_norms) return out;

  // X = G^{-1} Φᵀ, P1 = Φ X
  Matrix x = out.phi.transpose();
  linalg::cholesky_solve(linalg::multiply_at_b(out.phi, out.phi), x, 1e-14);
  const Matrix ex = dense_times(out.er, x.transpose());  // E Xᵀ (n × R)
  // P1 E = Φ (X E) = Φ (E Xᵀ)ᵀ, and X E Xᵀ = X (E Xᵀ)
  const Matrix xexT = linalg::multiply(x, ex);           // R × R
  const Matrix phi_xexT = linalg::multiply(out.phi, xexT);  // n × R

  SymMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pi = out.phi.row(i);
    const auto exi = ex.row(i);
    const auto qi = phi_xexT.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const auto pj = out.phi.row(j);
      const auto exj = ex.row(j);
      double p1e = 0.0, ep1 = 0.0, p1ep1 = 0.0;
      for (std::size_t k = 0; k < R; ++k) {
        p1e += pi[k] * exj[k];
        ep1 += exi[k] * pj[k];
        p1ep1 += qi[k] * pj[k];
      }
      a.set(i, j, p1e + ep1 - p1ep1);
    }
  }
  // A lives in span(Φ, EΦ), so its norm is that of a ≤ 2R square compression.
  Matrix span(n, 2 * R);
  const Matrix ephi = dense_times(out.er, out.phi);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < R; ++k) {
      span(i, k) = out.phi(i, k);
      span(i, R + k) = ephi(i, k);
    }
  const Matrix q = orthonormal_columns(span);
  const Matrix aq = dense_times(a, q);
  out.a_norm = linalg::op_norm(SymMatrix::from_dense(linalg::multiply_at_b(q, aq)));

  out.er_norm = linalg::op_norm(out.er);
  out.p2ep2_norm = linalg::op_norm(out.er - a);

  const Matrix q1 = orthonormal_columns(out.phi);
  out.span_residual = spectral_norm(dense_times(out.er, q1));
  return out;
}

std::size_t Adjacency::edges() const {
  std::size_t e = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e += bits[i * n + j];
  return e;
}

double Adjacency::density() const {
  if (n < 2) return 0.0;
  return static_cast<double>(edges()) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

Adjacency sample_adjacency(const SpectralKernel& kernel, const SampleSet& sample, std::uint64_t seed) {
  const SymMatrix t = kernel_matrix(kernel, sample);
  const std::size_t n = sample.n;
  const double scale = static_cast<double>(n);
  Adjacency a;
  a.n = n;
  a.bits.assign(n * n, 0);
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double p = t(i, j) * scale;
      if (!(p >= -1e-12 && p <= 1.0 + 1e-12))
        throw ConfigError("sample_adjacency: edge probability " + std::to_string(p) + " for pair (" +
                          std::to_string(i) + ", " + std::to_string(j) + ") is outside [0, 1]");
      p = std::clamp(p, 0.0, 1.0);
      const std::uint8_t bit = rng.bernoulli(p) ? 1 : 0;
      a.bits[i * n + j] = bit;
      a.bits[j * n + i] = bit;
    }
  return a;
}

OrthonormalityDiagnostic orthonormality_diagnostic(const SpectralKernel& kernel, const SampleSet& sample,
                                                   std::size_t count) {
  const Matrix phi = basis_matrix(kernel, sample, count);
  const Matrix g = linalg::multiply_at_b(phi, phi);
  OrthonormalityDiagnostic out;
  for (std::size_t j = 0; j < count; ++j)
    for (std::size_t k = 0; k < count; ++k) {
      if (j == k) out.max_diag = std::max(out.max_diag, std::abs(g(j, k) - 1.0));
      else out.max_offdiag = std::max(out.max_offdiag, std::abs(g(j, k)));
    }
  return out;
}

}  // namespace kernspec
