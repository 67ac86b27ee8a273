#include "kernspec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kernspec/errors.hpp"

namespace kernspec::linalg {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ConfigError("multiply: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix multiply_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ConfigError("multiply_at_b: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ak = a.row(k);
    auto bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      auto ci = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::from_dense(const Matrix& a) {
  if (a.rows() != a.cols()) throw ConfigError("SymMatrix::from_dense: matrix is not square");
  SymMatrix m(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j, 0.5 * (a(i, j) + a(j, i)));
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> values) {
  SymMatrix m(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m.set(i, i, values[i]);
  return m;
}

Matrix SymMatrix::to_dense() const {
  Matrix a(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = (*this)(i, j);
      a(i, j) = v;
      a(j, i) = v;
    }
  return a;
}

bool SymMatrix::all_finite() const {
  return std::all_of(lower_.begin(), lower_.end(), [](double v) { return std::isfinite(v); });
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : lower_) m = std::max(m, std::abs(v));
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

SymMatrix SymMatrix::operator-(const SymMatrix& other) const {
  if (other.n_ != n_) throw ConfigError("SymMatrix: order mismatch");
  SymMatrix r(n_);
  for (std::size_t k = 0; k < lower_.size(); ++k) r.lower_[k] = lower_[k] - other.lower_[k];
  return r;
}

SymMatrix SymMatrix::operator+(const SymMatrix& other) const {
  if (other.n_ != n_) throw ConfigError("SymMatrix: order mismatch");
  SymMatrix r(n_);
  for (std::size_t k = 0; k < lower_.size(); ++k) r.lower_[k] = lower_[k] + other.lower_[k];
  return r;
}

Spectrum sort_by_magnitude(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    if (ma != mb) return ma > mb;
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  Spectrum s;
  s.values.resize(n);
  s.order.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    s.values[pos] = values[idx[pos]];
    s.order[idx[pos]] = pos;
  }
  return s;
}

namespace {

constexpr int kMaxQlIterations = 60;

// Householder reduction to tridiagonal form. `w` holds the transpose of the
// working matrix so that every inner loop runs along a contiguous row. When
// `accumulate` is set, row j of `w` ends up as the j-th column of the
// orthogonal transformation.
void tridiagonalize(std::vector<double>& w, std::size_t n, std::vector<double>& d,
                    std::vector<double>& e, bool accumulate) {
  auto at = [&](std::size_t i, std::size_t j) -> double& { return w[i * n + j]; };

  for (std::size_t j = 0; j < n; ++j) d[j] = at(j, n - 1);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = at(j, i - 1);
        at(j, i) = 0.0;
        at(i, j) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        at(i, j) = f;
        double* row = &at(j, 0);
        g = e[j] + row[j] * f;
        for (std::size_t k = j + 1; k < i; ++k) {
          g += row[k] * d[k];
          e[k] += row[k] * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        double* row = &at(j, 0);
        for (std::size_t k = j; k < i; ++k) row[k] -= (f * e[k] + g * d[k]);
        d[j] = at(j, i - 1);
        at(j, i) = 0.0;
      }
    }
    d[i] = h;
  }

  if (!accumulate) {
    for (std::size_t j = 0; j < n; ++j) d[j] = at(j, j);
    e[0] = 0.0;
    return;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    at(i, n - 1) = at(i, i);
    at(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      const double* pivot = &at(i + 1, 0);
      for (std::size_t k = 0; k <= i; ++k) d[k] = pivot[k] / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double* row = &at(j, 0);
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += pivot[k] * row[k];
        for (std::size_t k = 0; k <= i; ++k) row[k] -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) at(i + 1, k) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = at(j, n - 1);
    at(j, n - 1) = 0.0;
  }
  at(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit-shift QL on a symmetric tridiagonal matrix. On entry e[i] couples
// d[i] and d[i+1] (e[n-1] unused). `rotate(i, c, s)` applies each plane
// rotation to whatever eigenvector data the caller tracks.
template <typename Rotate>
void implicit_ql(std::vector<double>& d, std::vector<double>& e, Rotate&& rotate) {
  const std::size_t n = d.size();
  if (n == 0) return;
  e[n - 1] = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  double f = 0.0;
  double tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > kMaxQlIterations) {
          throw NumericalError("eigensolver: eigenvalue " + std::to_string(l) +
                               " did not converge within " + std::to_string(kMaxQlIterations) +
                               " QL iterations");
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          rotate(ii, c, s);
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

void check_finite(const SymMatrix& m) {
  if (!m.all_finite()) throw NumericalError("eigensolver: matrix has non-finite entries");
}

// e from tridiagonalize has e[i] coupling i-1 and i; implicit_ql wants the
// coupling stored at the lower index.
void shift_offdiagonal(std::vector<double>& e) {
  for (std::size_t i = 1; i < e.size(); ++i) e[i - 1] = e[i];
  if (!e.empty()) e.back() = 0.0;
}

}  // namespace

EigenDecomposition eig_sym(const SymMatrix& m) {
  check_finite(m);
  const std::size_t n = m.order();
  EigenDecomposition out;
  if (n == 0) return out;

  std::vector<double> w(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w[i * n + j] = m(i, j);
  std::vector<double> d(n), e(n);
  tridiagonalize(w, n, d, e, /*accumulate=*/true);
  shift_offdiagonal(e);
  implicit_ql(d, e, [&](std::size_t i, double c, double s) {
    double* a = &w[i * n];
    double* b = &w[(i + 1) * n];
    for (std::size_t k = 0; k < n; ++k) {
      const double h = b[k];
      b[k] = s * a[k] + c * h;
      a[k] = c * a[k] - s * h;
    }
  });

  out.spectrum = sort_by_magnitude(d);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t col = out.spectrum.order[j];
    const double* v = &w[j * n];
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, col) = v[k];
  }
  return out;
}

Spectrum eigenvalues(const SymMatrix& m) {
  check_finite(m);
  const std::size_t n = m.order();
  if (n == 0) return {};
  std::vector<double> w(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w[i * n + j] = m(i, j);
  std::vector<double> d(n), e(n);
  tridiagonalize(w, n, d, e, /*accumulate=*/false);
  shift_offdiagonal(e);
  implicit_ql(d, e, [](std::size_t, double, double) {});
  return sort_by_magnitude(d);
}

Spectrum top_eigenvalues(const SymMatrix& m, std::size_t k) {
  check_finite(m);
  const std::size_t n = m.order();
  k = std::min(k, n);
  if (k == 0) return {};
  if (n <= 64 || 4 * k >= n) {
    Spectrum full = eigenvalues(m);
    full.values.resize(k);
    full.order.clear();
    return full;
  }
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) a[i * n + j] = a[j * n + i] = m(i, j);

  std::vector<std::vector<double>> q;
  std::vector<double> alpha, beta;  // beta[j] couples j and j+1
  std::uint64_t state = 0x243f6a8885a308d3ULL;
  auto fresh = [&]() {
    std::vector<double> v(n);
    for (double& x : v) {
      state += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = state;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      z ^= z >> 31;
      x = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
    }
    return v;
  };
  auto orthogonalize = [&](std::vector<double>& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : q) {
        double c = 0.0;
        for (std::size_t t = 0; t < n; ++t) c += u[t] * v[t];
        for (std::size_t t = 0; t < n; ++t) v[t] -= c * u[t];
      }
  };
  auto norm = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };

  double scale = 0.0;  // running estimate of ‖m‖
  std::vector<double> v = fresh();
  {
    const double nv = norm(v);
    for (double& x : v) x /= nv;
  }
  const std::size_t min_steps = std::min(n, 2 * k + 20);
  std::vector<double> w(n);
  for (std::size_t j = 0;; ++j) {
    q.push_back(v);
    const std::vector<double>& qj = q.back();
    for (std::size_t r = 0; r < n; ++r) {
      const double* row = &a[r * n];
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t) s += row[t] * qj[t];
      w[r] = s;
    }
    double aj = 0.0;
    for (std::size_t t = 0; t < n; ++t) aj += w[t] * qj[t];
    alpha.push_back(aj);
    orthogonalize(w);
    double bj = norm(w);
    scale = std::max({scale, std::abs(aj), bj});

    const std::size_t steps = j + 1;
    bool exhausted = steps == n;
    bool restart = !exhausted && bj <= 1e-13 * std::max(scale, 1e-300);
    if (restart) {
      // invariant subspace found: continue from a fresh orthogonal direction
      std::vector<double> f = fresh();
      orthogonalize(f);
      const double nf = norm(f);
      if (nf <= 1e-8) {
        exhausted = true;
      } else {
        for (std::size_t t = 0; t < n; ++t) w[t] = f[t] / nf;
        bj = 0.0;
      }
    } else if (!exhausted) {
      for (std::size_t t = 0; t < n; ++t) w[t] /= bj;
    }

    const bool check = exhausted || (steps >= min_steps && (steps - min_steps) % 10 == 0);
    if (check) {
      // Ritz values with last eigenvector components (via the reversed matrix)
      std::vector<double> d(alpha.rbegin(), alpha.rend());
      std::vector<double> off(beta.rbegin(), beta.rend());
      const TridiagonalEigen ritz = tridiagonal_eigen(d, off);
      std::vector<std::size_t> idx(ritz.values.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(ritz.values[x]) > std::abs(ritz.values[y]);
      });
      bool converged = exhausted || idx.size() >= k;
      const double residual_scale = restart ? 0.0 : bj;
      for (std::size_t r = 0; converged && r < k; ++r)
        if (std::abs(residual_scale * ritz.first_components[idx[r]]) > 1e-12 * scale) converged = false;
      if (converged) {
        std::vector<double> top;
        for (std::size_t r = 0; r < std::min(k, idx.size()); ++r) top.push_back(ritz.values[idx[r]]);
        top.resize(k, 0.0);
        Spectrum out = sort_by_magnitude(top);
        out.order.clear();
        return out;
      }
    }
    if (exhausted) break;
    beta.push_back(bj);
    v = w;
  }
  throw NumericalError("top_eigenvalues: Lanczos iteration did not converge");
}

TridiagonalEigen tridiagonal_eigen(std::span<const double> diag, std::span<const double> off) {
  const std::size_t n = diag.size();
  if (n == 0) return {};
  if (off.size() + 1 < n) throw ConfigError("tridiagonal_eigen: off-diagonal too short");
  std::vector<double> d(diag.begin(), diag.end());
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = off[i];
  std::vector<double> z(n, 0.0);
  z[0] = 1.0;
  implicit_ql(d, e, [&](std::size_t i, double c, double s) {
    const double h = z[i + 1];
    z[i + 1] = s * z[i] + c * h;
    z[i] = c * z[i] - s * h;
  });
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  TridiagonalEigen out;
  out.values.reserve(n);
  out.first_components.reserve(n);
  for (std::size_t k : idx) {
    out.values.push_back(d[k]);
    out.first_components.push_back(z[k]);
  }
  return out;
}

double op_norm(const SymMatrix& m) {
  if (m.order() == 0) return 0.0;
  const Spectrum s = eigenvalues(m);
  return std::abs(s.values.front());
}

double op_norm(const Matrix& square_symmetric) {
  return op_norm(SymMatrix::from_dense(square_symmetric));
}

double delta2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<double> x(n, 0.0), y(n, 0.0);
  std::copy(a.begin(), a.end(), x.begin());
  std::copy(b.begin(), b.end(), y.begin());
  std::sort(x.begin(), x.end(), std::greater<>());
  std::sort(y.begin(), y.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(sum);
}

namespace {

std::vector<double> value_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

double magnitude_pairing_gap(std::span<const double> a, std::span<const double> b) {
  const Spectrum sa = sort_by_magnitude(a);
  const Spectrum sb = sort_by_magnitude(b);
  double gap = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) gap = std::max(gap, std::abs(sa[i] - sb[i]));
  return gap;
}

}  // namespace

PerturbationCheck ostrowski_gap(const Matrix& s, std::span<const double> lambda) {
  const std::size_t n = s.rows();
  const std::size_t r = s.cols();
  if (lambda.size() != r) throw ConfigError("ostrowski_gap: lambda length must equal S columns");
  if (r > n) throw ConfigError("ostrowski_gap: requires R <= n");

  // SΛSᵀ
  SymMatrix tilde(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < r; ++k) v += s(i, k) * lambda[k] * s(j, k);
      tilde.set(i, j, v);
    }
  Matrix gram = multiply_at_b(s, s);
  for (std::size_t k = 0; k < r; ++k) gram(k, k) -= 1.0;
  const double eps = r == 0 ? 0.0 : op_norm(gram);

  std::vector<double> padded(n, 0.0);
  std::copy(lambda.begin(), lambda.end(), padded.begin());
  const std::vector<double> tilde_values = eigenvalues(tilde).values;

  const std::vector<double> mt = value_sorted(tilde_values);
  const std::vector<double> lp = value_sorted(padded);

  double scale = 0.0;
  for (double v : lambda) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * (1.0 + scale) * (1.0 + eps) * static_cast<double>(n + 1);

  PerturbationCheck out;
  out.max_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double gap = std::abs(mt[k] - lp[k]);
    const double bound = std::abs(lp[k]) * eps;
    out.max_gap = std::max(out.max_gap, gap);
    out.bound = std::max(out.bound, bound);
    out.max_slack = std::min(out.max_slack, bound - gap);
  }
  if (n == 0) out.max_slack = 0.0;
  out.holds = out.max_slack >= -tol;
  out.magnitude_order_gap = magnitude_pairing_gap(tilde_values, padded);
  return out;
}

PerturbationCheck weyl_gap(const SymMatrix& a, const SymMatrix& b) {
  if (a.order() != b.order()) throw ConfigError("weyl_gap: matrices must have the same order");
  const std::vector<double> la = eigenvalues(a).values;
  const std::vector<double> lb = eigenvalues(b).values;
  const std::vector<double> sa = value_sorted(la);
  const std::vector<double> sb = value_sorted(lb);
  PerturbationCheck out;
  out.bound = op_norm(a - b);
  for (std::size_t i = 0; i < sa.size(); ++i) out.max_gap = std::max(out.max_gap, std::abs(sa[i] - sb[i]));
  out.max_slack = out.bound - out.max_gap;
  const double tol = 1e-12 * (1.0 + std::max(a.max_abs(), b.max_abs())) * static_cast<double>(a.order() + 1);
  out.holds = out.max_slack >= -tol;
  out.magnitude_order_gap = magnitude_pairing_gap(la, lb);
  return out;
}

Matrix thin_r_factor(const Matrix& phi) {
  const std::size_t n = phi.rows();
  const std::size_t r = phi.cols();
  if (n < r) throw ConfigError("thin_r_factor: requires rows >= cols");
  // Work column-major for contiguous Householder updates.
  std::vector<double> a(n * r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < r; ++j) a[j * n + i] = phi(i, j);

  std::vector<double> v(n);
  for (std::size_t j = 0; j < r; ++j) {
    double* col = &a[j * n];
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += col[i] * col[i];
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double alpha = col[j] > 0 ? -norm : norm;
    for (std::size_t i = j; i < n; ++i) v[i] = col[i];
    v[j] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < n; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    for (std::size_t c = j; c < r; ++c) {
      double* target = &a[c * n];
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += v[i] * target[i];
      const double factor = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < n; ++i) target[i] -= factor * v[i];
    }
  }
  Matrix rf(r, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i; j < r; ++j) rf(i, j) = a[j * n + i];
  return rf;
}

Spectrum factored_spectrum(const Matrix& phi, std::span<const double> lambda) {
  const std::size_t n = phi.rows();
  const std::size_t r = phi.cols();
  if (lambda.size() != r) throw ConfigError("factored_spectrum: lambda length must equal columns");
  if (r >= n) {
    SymMatrix t(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double v = 0.0;
        for (std::size_t k = 0; k < r; ++k) v += phi(i, k) * lambda[k] * phi(j, k);
        t.set(i, j, v);
      }
    return eigenvalues(t);
  }
  const Matrix rf = thin_r_factor(phi);
  SymMatrix core(r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = 0.0;
      for (std::size_t k = std::max(i, j); k < r; ++k) v += rf(i, k) * lambda[k] * rf(j, k);
      core.set(i, j, v);
    }
  std::vector<double> values = eigenvalues(core).values;
  values.resize(n, 0.0);
  return sort_by_magnitude(values);
}

void cholesky_solve(const Matrix& g, Matrix& b, double min_pivot) {
  const std::size_t r = g.rows();
  if (g.cols() != r || b.rows() != r) throw ConfigError("cholesky_solve: dimension mismatch");
  Matrix l(r, r);
  for (std::size_t j = 0; j < r; ++j) {
    double diag = g(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > min_pivot)) {
      throw NumericalError("Gram matrix is numerically singular (pivot " + std::to_string(diag) +
                           " at column " + std::to_string(j) + ")");
    }
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < r; ++i) {
      double v = g(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < r; ++i) {
      double v = b(i, c);
      for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * b(k, c);
      b(i, c) = v / l(i, i);
    }
    for (std::size_t i = r; i-- > 0;) {
      double v = b(i, c);
      for (std::size_t k = i + 1; k < r; ++k) v -= l(k, i) * b(k, c);
      b(i, c) = v / l(i, i);
    }
  }
}

}  // namespace kernspec::linalg
