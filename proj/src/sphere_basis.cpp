// Orthonormal spherical-harmonic basis without explicit Y_jl: level l is
// spanned by the zonal functions Z_l(⟨·, y_m⟩) at d_l anchor points y_m, and
// the reproducing property ⟨Z_l(·, y), Z_l(·, y')⟩ = Z_l(⟨y, y'⟩) gives the
// Gram matrix C, so C^{-1/2} [Z_l(⟨x, y_m⟩)]_m is orthonormal in L²(σ).

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>

#include "kernspec/errors.hpp"
#include "kernspec/kernelmodel.hpp"
#include "kernspec/linalg.hpp"
#include "kernspec/rng.hpp"
#include "kernspec/specfun.hpp"

namespace kernspec {

namespace {

constexpr int kMaxLevels = 256;
constexpr std::size_t kPoolFactor = 4;

double zonal(int d, int l, double s) {
  if (s > 1.0) s = 1.0;
  if (s < -1.0) s = -1.0;
  return specfun::zonal_eval(d, l, s);
}

double dot(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

struct Level {
  std::size_t dim = 0;
  std::vector<double> anchors;  // dim × d
  linalg::Matrix transform;     // C^{-1/2}
};

// Anchors are picked greedily from a random pool by pivoted Cholesky on the
// reproducing kernel, which keeps C well conditioned.
std::unique_ptr<Level> build_level(int d, int l) {
  auto level = std::make_unique<Level>();
  const std::size_t dim = specfun::harmonic_dim(d, l);
  level->dim = dim;
  const std::size_t pool = dim == 1 ? 1 : kPoolFactor * dim;
  SplitMix64 rng(0x9e3779b97f4a7c15ULL ^ (static_cast<std::uint64_t>(d) << 32) ^ static_cast<std::uint64_t>(l));
  std::vector<double> cand(pool * static_cast<std::size_t>(d));
  for (std::size_t m = 0; m < pool; ++m) {
    double* y = &cand[m * d];
    double norm = 0.0;
    do {
      norm = 0.0;
      for (int k = 0; k < d; ++k) {
        y[k] = rng.normal();
        norm += y[k] * y[k];
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (int k = 0; k < d; ++k) y[k] /= norm;
  }

  const double diag = static_cast<double>(dim);
  std::vector<double> residual(pool, diag);
  std::vector<double> factor(pool * dim, 0.0);  // pool × dim, column k = k-th pivot
  std::vector<std::size_t> chosen;
  chosen.reserve(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    std::size_t p = 0;
    for (std::size_t m = 1; m < pool; ++m)
      if (residual[m] > residual[p]) p = m;
    if (!(residual[p] > 1e-10 * diag))
      throw NumericalError("sphere basis: anchor selection stalled at level " + std::to_string(l));
    const double root = std::sqrt(residual[p]);
    for (std::size_t m = 0; m < pool; ++m) {
      double g = zonal(d, l, dot(&cand[m * d], &cand[p * d], d));
      for (std::size_t j = 0; j < k; ++j) g -= factor[m * dim + j] * factor[p * dim + j];
      factor[m * dim + k] = g / root;
    }
    for (std::size_t m = 0; m < pool; ++m) residual[m] -= factor[m * dim + k] * factor[m * dim + k];
    residual[p] = 0.0;
    chosen.push_back(p);
  }

  level->anchors.resize(dim * static_cast<std::size_t>(d));
  for (std::size_t m = 0; m < dim; ++m)
    for (int k = 0; k < d; ++k) level->anchors[m * d + k] = cand[chosen[m] * d + k];

  linalg::SymMatrix gram(dim);
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b <= a; ++b)
      gram.set(a, b, zonal(d, l, dot(&level->anchors[a * d], &level->anchors[b * d], d)));
  const linalg::EigenDecomposition eig = linalg::eig_sym(gram);
  const double top = std::abs(eig.spectrum.values.front());
  for (double mu : eig.spectrum.values)
    if (!(mu > 1e-12 * top))
      throw NumericalError("sphere basis: anchor Gram matrix is singular at level " + std::to_string(l));
  level->transform = linalg::Matrix(dim, dim);
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b < dim; ++b) {
      double v = 0.0;
      for (std::size_t k = 0; k < dim; ++k)
        v += eig.vectors(a, k) * eig.vectors(b, k) / std::sqrt(eig.spectrum.values[k]);
      level->transform(a, b) = v;
    }
  return level;
}

class SphereBasis final : public EigenBasis {
 public:
  explicit SphereBasis(int d) : d_(d) {
    starts_.push_back(0);
    // Stop well before d_l could overflow; no kernel materializes that far.
    for (int l = 0; l < kMaxLevels && starts_.back() <= (std::uint64_t{1} << 40); ++l)
      starts_.push_back(starts_.back() + specfun::harmonic_dim(d, l));
  }

  void evaluate(std::span<const double> point, std::span<const std::size_t> indices,
                std::span<double> out) const override {
    // z values per level, computed once per call
    std::vector<std::pair<int, std::vector<double>>> cache;
    for (std::size_t m = 0; m < indices.size(); ++m) {
      const auto [l, j] = decode(indices[m]);
      const Level& level = get(l);
      const std::vector<double>* z = nullptr;
      for (const auto& entry : cache)
        if (entry.first == l) z = &entry.second;
      if (z == nullptr) {
        std::vector<double> values(level.dim);
        for (std::size_t a = 0; a < level.dim; ++a)
          values[a] = zonal(d_, l, dot(point.data(), &level.anchors[a * d_], d_));
        cache.emplace_back(l, std::move(values));
        z = &cache.back().second;
      }
      double v = 0.0;
      const auto row = level.transform.row(j);
      for (std::size_t a = 0; a < level.dim; ++a) v += row[a] * (*z)[a];
      out[m] = v;
    }
  }

 private:
  std::pair<int, std::size_t> decode(std::size_t index) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), static_cast<std::uint64_t>(index));
    if (it == starts_.end()) throw ConfigError("sphere basis: index out of range");
    const int l = static_cast<int>(it - starts_.begin()) - 1;
    return {l, index - static_cast<std::size_t>(starts_[l])};
  }

  const Level& get(int l) const {
    std::call_once(once_[l], [&] { levels_[l] = build_level(d_, l); });
    return *levels_[l];
  }

  int d_;
  std::vector<std::uint64_t> starts_;
  mutable std::array<std::once_flag, kMaxLevels> once_;
  mutable std::array<std::unique_ptr<Level>, kMaxLevels> levels_;
};

}  // namespace

std::shared_ptr<const EigenBasis> make_sphere_basis(int d) {
  if (d < 3) throw ConfigError("sphere basis requires d >= 3");
  return std::make_shared<SphereBasis>(d);
}

std::size_t sphere_native_index(int d, int level, std::size_t within) {
  if (d < 3) throw ConfigError("sphere basis requires d >= 3");
  if (level < 0) throw ConfigError("sphere basis: level must be nonnegative");
  const std::uint64_t start = level == 0 ? 0 : specfun::cumulative_harmonic_dim(d, level - 1);
  if (within >= specfun::harmonic_dim(d, level))
    throw ConfigError("sphere basis: within-level index out of range at level " + std::to_string(level));
  return static_cast<std::size_t>(start + within);
}

}  // namespace kernspec
