#include "kernspec/kernelmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "kernspec/errors.hpp"
#include "kernspec/specfun.hpp"

namespace kernspec {

namespace sf = specfun;

namespace {

constexpr double kQuadratureTolerance = 1e-10;
constexpr int kMaxGaussJacobiOrder = 8192;
constexpr int kMaxPanelsPerPiece = 4096;
// Quadrature eigenvalues below this are cancellation noise.
constexpr double kZeroSnap = 1e-14;
// |λ*_L| d_L above this means the level cutoff does not capture hypothesis H.
constexpr double kHTailTolerance = 1e-6;
// Gaussian and exponential synthetic spectra stop once λ_k/λ_1 drops below this.
constexpr double kRelativeCutoff = 1e-30;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::size_t Domain::point_size() const {
  switch (kind) {
    case DomainKind::sphere:
      return static_cast<std::size_t>(dimension);
    case DomainKind::gaussian_line:
      return 1;
    case DomainKind::abstract:
      return 0;
  }
  return 0;
}

std::string Domain::describe() const {
  switch (kind) {
    case DomainKind::sphere:
      return "sphere(d=" + std::to_string(dimension) + ")";
    case DomainKind::gaussian_line:
      return "gaussian_line";
    case DomainKind::abstract:
      return "abstract";
  }
  return "unknown";
}

double DecayModel::at(double k) const {
  switch (kind) {
    case Kind::polynomial:
      return scale * std::pow(k, -rate);
    case Kind::exponential:
      return scale * std::exp(-rate * k);
    case Kind::none:
      return 0.0;
  }
  return 0.0;
}

std::string DecayModel::describe() const {
  switch (kind) {
    case Kind::polynomial:
      return fmt(scale) + "*k^-" + fmt(rate);
    case Kind::exponential:
      return fmt(scale) + "*exp(-" + fmt(rate) + "*k)";
    case Kind::none:
      return "none";
  }
  return "none";
}

double GrowthModel::at(double k) const {
  switch (kind) {
    case Kind::polynomial:
      return scale * std::pow(k, rate);
    case Kind::exponential:
      return scale * std::exp(rate * k);
    case Kind::none:
      return 0.0;
  }
  return 0.0;
}

std::string GrowthModel::describe() const {
  switch (kind) {
    case Kind::polynomial:
      return fmt(scale) + "*k^" + fmt(rate);
    case Kind::exponential:
      return fmt(scale) + "*exp(" + fmt(rate) + "*k)";
    case Kind::none:
      return "none";
  }
  return "none";
}

double SpectralKernel::lambda(std::size_t i) const {
  if (i == 0) throw ConfigError("eigenvalue index is 1-based");
  if (i > eigenvalues.size()) {
    if (!truncated) return 0.0;
    throw ConfigError("eigenvalue index " + std::to_string(i) + " exceeds the materialized K_max = " +
                      std::to_string(eigenvalues.size()));
  }
  return eigenvalues[i - 1];
}

std::string RegularityClass::constraint_violation() const {
  if (!(delta > 0.0)) return "delta > 0";
  if (s < 0) return "s >= 0";
  switch (tag) {
    case Tag::H:
      return {};
    case Tag::H1:
      return delta > 2.0 * s + 1.0 ? std::string{} : "delta > 2s+1";
    case Tag::H2:
      return delta > s ? std::string{} : "delta > s";
    case Tag::H3:
      return delta > 2.0 * s ? std::string{} : "delta > 2s";
  }
  return {};
}

std::string RegularityClass::describe() const {
  return to_string(tag) + "(delta=" + fmt(delta) + ", s=" + std::to_string(s) + ")";
}

std::string to_string(RegularityClass::Tag tag) {
  switch (tag) {
    case RegularityClass::Tag::H:
      return "H";
    case RegularityClass::Tag::H1:
      return "H1";
    case RegularityClass::Tag::H2:
      return "H2";
    case RegularityClass::Tag::H3:
      return "H3";
  }
  return "H";
}

RegularityClass::Tag regularity_tag_from_string(const std::string& s) {
  if (s == "H") return RegularityClass::Tag::H;
  if (s == "H1") return RegularityClass::Tag::H1;
  if (s == "H2") return RegularityClass::Tag::H2;
  if (s == "H3") return RegularityClass::Tag::H3;
  throw ConfigError("unknown regularity class '" + s + "' (expected H, H1, H2 or H3)");
}

std::string to_string(KernelSpec::Family family) {
  using F = KernelSpec::Family;
  switch (family) {
    case F::constant:
      return "constant";
    case F::linear:
      return "linear";
    case F::threshold:
      return "threshold";
    case F::logistic:
      return "logistic";
    case F::gaussian_narrow:
      return "gaussian_narrow";
    case F::gaussian_wide:
      return "gaussian_wide";
    case F::custom:
      return "custom";
    case F::synthetic:
      return "synthetic";
  }
  return "unknown";
}

KernelSpec::Family family_from_string(const std::string& s) {
  using F = KernelSpec::Family;
  for (F f : {F::constant, F::linear, F::threshold, F::logistic, F::gaussian_narrow, F::gaussian_wide, F::custom,
              F::synthetic})
    if (to_string(f) == s) return f;
  throw ConfigError("unknown kernel family '" + s + "'");
}

// --- quadrature --------------------------------------------------------------

namespace {

// Adds weight·f(t)·G_l(t) to sums[l] for l = 0..L.
void accumulate_moments(double t, double weight, double gamma, std::vector<double>& sums) {
  const std::size_t count = sums.size();
  double prev = 1.0;
  sums[0] += weight * prev;
  if (count == 1) return;
  double cur = 2.0 * gamma * t;
  sums[1] += weight * cur;
  for (std::size_t l = 2; l < count; ++l) {
    const double k = static_cast<double>(l);
    const double next = (2.0 * t * (k + gamma - 1.0) * cur - (k + 2.0 * gamma - 2.0) * prev) / k;
    prev = cur;
    cur = next;
    sums[l] += weight * cur;
  }
}

std::vector<double> moments_gauss_jacobi(const std::function<double(double)>& f, double gamma, int max_level,
                                         int order) {
  const sf::QuadratureRule rule = sf::gauss_jacobi_rule(sf::GegenbauerParam(gamma), order);
  std::vector<double> sums(static_cast<std::size_t>(max_level) + 1, 0.0);
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double t = rule.nodes[k];
    accumulate_moments(t, rule.weights[k] * f(t), gamma, sums);
  }
  return sums;
}

// After t = cos θ the integral runs over θ ∈ [0, π] with weight sin^{2γ}θ;
// pieces between breakpoints get composite Gauss-Legendre panels.
std::vector<double> moments_split(const std::function<double(double)>& f, double gamma, int max_level,
                                  const std::vector<double>& theta_edges, const sf::QuadratureRule& legendre,
                                  int panels) {
  std::vector<double> sums(static_cast<std::size_t>(max_level) + 1, 0.0);
  for (std::size_t piece = 0; piece + 1 < theta_edges.size(); ++piece) {
    const double a = theta_edges[piece];
    const double h = (theta_edges[piece + 1] - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double left = a + h * p;
      for (std::size_t k = 0; k < legendre.nodes.size(); ++k) {
        const double theta = left + 0.5 * h * (legendre.nodes[k] + 1.0);
        const double t = std::cos(theta);
        const double w = 0.5 * h * legendre.weights[k] * std::pow(std::sin(theta), 2.0 * gamma);
        accumulate_moments(t, w * f(t), gamma, sums);
      }
    }
  }
  return sums;
}

std::vector<double> scale_to_eigenvalues(const std::vector<double>& moments, int d) {
  const sf::GegenbauerParam param = sf::GegenbauerParam::from_dimension(d);
  const double b_d = 1.0 / sf::gegenbauer_weight_mass(param);
  std::vector<double> out(moments.size());
  // c_l / d_l = 1 / G_l(1)
  for (std::size_t l = 0; l < moments.size(); ++l)
    out[l] = b_d * moments[l] / sf::gegenbauer_endpoint(param, static_cast<int>(l));
  return out;
}

bool settled(const std::vector<double>& prev, const std::vector<double>& cur) {
  for (std::size_t l = 0; l < cur.size(); ++l)
    if (!(std::abs(cur[l] - prev[l]) <= 1e-2 * kQuadratureTolerance + kQuadratureTolerance * std::abs(cur[l])))
      return false;
  return true;
}

std::vector<double> adaptive_star_eigenvalues(const DotProductKernel& kernel, int max_level, int order) {
  if (!kernel.profile) throw ConfigError("dot-product kernel has no profile");
  if (max_level < 0) throw ConfigError("harmonic level must be nonnegative");
  if (order < 1) throw ConfigError("quadrature order must be >= 1");
  const int d = kernel.dimension;
  const double gamma = sf::GegenbauerParam::from_dimension(d).gamma();

  std::vector<double> breaks;
  for (double b : kernel.breakpoints)
    if (b > -1.0 && b < 1.0) breaks.push_back(b);

  std::vector<double> prev, cur;
  if (breaks.empty()) {
    int n = std::max(order, (max_level + 2) / 2 + 1);
    prev = scale_to_eigenvalues(moments_gauss_jacobi(kernel.profile, gamma, max_level, n), d);
    while (true) {
      n *= 2;
      if (n > kMaxGaussJacobiOrder)
        throw NumericalError("eigenvalue quadrature did not converge by order " +
                             std::to_string(kMaxGaussJacobiOrder) + " for kernel " + kernel.id);
      cur = scale_to_eigenvalues(moments_gauss_jacobi(kernel.profile, gamma, max_level, n), d);
      if (settled(prev, cur)) break;
      prev = std::move(cur);
    }
  } else {
    std::vector<double> edges{0.0, std::numbers::pi};
    for (double b : breaks) edges.push_back(std::acos(b));
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    const sf::QuadratureRule legendre = sf::gauss_jacobi_rule(sf::GegenbauerParam(0.5), std::max(order, 8));
    int panels = 1;
    prev = scale_to_eigenvalues(moments_split(kernel.profile, gamma, max_level, edges, legendre, panels), d);
    while (true) {
      panels *= 2;
      if (panels > kMaxPanelsPerPiece)
        throw NumericalError("eigenvalue quadrature did not converge with " + std::to_string(kMaxPanelsPerPiece) +
                             " panels per piece for kernel " + kernel.id);
      cur = scale_to_eigenvalues(moments_split(kernel.profile, gamma, max_level, edges, legendre, panels), d);
      if (settled(prev, cur)) break;
      prev = std::move(cur);
    }
  }
  for (double& v : cur)
    if (std::abs(v) < kZeroSnap) v = 0.0;
  return cur;
}

}  // namespace

double eigenvalue_quadrature(const DotProductKernel& kernel, int l, int order) {
  if (l < 0) throw ConfigError("eigenvalue_quadrature: level must be nonnegative");
  return adaptive_star_eigenvalues(kernel, l, order)[static_cast<std::size_t>(l)];
}

std::vector<double> star_eigenvalues_by_quadrature(const DotProductKernel& kernel, int max_level, int order) {
  return adaptive_star_eigenvalues(kernel, max_level, order);
}

double threshold_eigenvalue(int d, int l) {
  if (d < 3) throw ConfigError("threshold_eigenvalue: d must be >= 3");
  if (l < 0) throw ConfigError("threshold_eigenvalue: level must be nonnegative");
  if (l == 0) return 0.5;
  if (l % 2 == 0) return 0.0;
  const int sign_exponent = l + (l + 1) / 2;
  const double sign = sign_exponent % 2 == 0 ? 1.0 : -1.0;
  return sign * sf::beta_function(0.5 * d, 0.5 * l) / (2.0 * std::numbers::pi);
}

// --- named kernels -----------------------------------------------------------

namespace {

void validate_profile(const DotProductKernel& k) {
  constexpr int kGrid = 2000;
  for (int j = 0; j <= kGrid; ++j) {
    const double t = -1.0 + 2.0 * j / kGrid;
    const double v = k.profile(t);
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
      throw ConfigError("kernel " + k.id + ": profile value " + fmt(v) + " at t=" + fmt(t) + " is outside [0, 1]");
  }
}

std::function<double(double)> piecewise_linear(std::vector<std::pair<double, double>> table) {
  return [table = std::move(table)](double t) {
    if (t <= table.front().first) return table.front().second;
    if (t >= table.back().first) return table.back().second;
    auto it = std::upper_bound(table.begin(), table.end(), t,
                               [](double x, const std::pair<double, double>& p) { return x < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (t - lo.first) / (hi.first - lo.first);
    return lo.second + w * (hi.second - lo.second);
  };
}

void check_table(const std::vector<std::pair<double, double>>& table) {
  if (table.size() < 2) throw ConfigError("custom profile table needs at least two rows");
  if (std::abs(table.front().first + 1.0) > 1e-12 || std::abs(table.back().first - 1.0) > 1e-12)
    throw ConfigError("custom profile table must span t = -1 to t = 1");
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (!std::isfinite(table[k].first) || !std::isfinite(table[k].second))
      throw ConfigError("custom profile table has a non-finite entry in row " + std::to_string(k + 1));
    if (k > 0 && !(table[k].first > table[k - 1].first))
      throw ConfigError("custom profile table: t must be strictly increasing (row " + std::to_string(k + 1) + ")");
  }
}

std::string sphere_id(const std::string& name, const KernelSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << name << "(";
  switch (spec.family) {
    case KernelSpec::Family::constant:
      os << "p0=" << spec.p0 << ", ";
      break;
    case KernelSpec::Family::linear:
      os << "p0=" << spec.p0 << ", p1=" << spec.p1 << ", ";
      break;
    case KernelSpec::Family::logistic:
      os << "r=" << spec.r << ", ";
      break;
    default:
      break;
  }
  os << "d=" << spec.d << ")";
  return os.str();
}

}  // namespace

DotProductKernel dot_product_kernel(const KernelSpec& spec) {
  using F = KernelSpec::Family;
  const int d = spec.d;
  const sf::GegenbauerParam param = sf::GegenbauerParam::from_dimension(d);
  const double gamma = param.gamma();
  const int levels = spec.limits.l_max;
  if (levels < 1) throw ConfigError("L_max must be >= 1");

  DotProductKernel k;
  k.dimension = d;
  k.max_level = levels;
  k.id = sphere_id(to_string(spec.family), spec);
  std::vector<double> star(static_cast<std::size_t>(levels) + 1, 0.0);

  switch (spec.family) {
    case F::constant: {
      if (!(spec.p0 >= 0.0 && spec.p0 <= 1.0)) throw ConfigError("constant kernel requires 0 <= p0 <= 1");
      const double p0 = spec.p0;
      k.profile = [p0](double) { return p0; };
      star[0] = p0;
      k.finite_rank = true;
      break;
    }
    case F::linear: {
      if (!(spec.p0 >= 0.0 && spec.p0 <= 1.0)) throw ConfigError("linear kernel requires 0 <= p0 <= 1");
      if (!(std::abs(spec.p1) <= spec.p0 / (2.0 * gamma) * (1.0 + 1e-15)))
        throw ConfigError("linear kernel requires |p1| <= p0/(2*gamma) = " + fmt(spec.p0 / (2.0 * gamma)) +
                          ", got p1 = " + fmt(spec.p1));
      const double p0 = spec.p0;
      const double slope = 2.0 * gamma * spec.p1;
      k.profile = [p0, slope](double t) { return p0 + slope * t; };
      star[0] = p0;
      star[1] = spec.p1 * (d - 2.0) / d;
      k.finite_rank = true;
      break;
    }
    case F::threshold: {
      k.profile = [](double t) { return t >= 0.0 ? 1.0 : 0.0; };
      k.breakpoints = {0.0};
      for (int l = 0; l <= levels; ++l) star[static_cast<std::size_t>(l)] = threshold_eigenvalue(d, l);
      k.satisfies_h = false;
      k.level_decay_exponent = 0.5 * d;
      break;
    }
    case F::logistic: {
      if (!(spec.r >= 0.0) || !std::isfinite(spec.r)) throw ConfigError("logistic kernel requires r >= 0");
      const double r = spec.r;
      k.profile = [r](double t) { return 1.0 / (1.0 + std::exp(-r * t)); };
      k.breakpoints = {0.0};
      validate_profile(k);
      star = star_eigenvalues_by_quadrature(k, levels);
      break;
    }
    case F::custom: {
      check_table(spec.table);
      k.profile = piecewise_linear(spec.table);
      for (std::size_t j = 1; j + 1 < spec.table.size(); ++j) k.breakpoints.push_back(spec.table[j].first);
      validate_profile(k);
      star = star_eigenvalues_by_quadrature(k, levels);
      break;
    }
    default:
      throw ConfigError("kernel family " + to_string(spec.family) + " is not a dot-product kernel");
  }
  validate_profile(k);
  k.star_eigenvalues = std::move(star);

  if (k.satisfies_h && !k.finite_rank) {
    const double tail = std::abs(k.star_eigenvalues.back()) * static_cast<double>(sf::harmonic_dim(d, levels));
    if (tail > kHTailTolerance) k.satisfies_h = false;
  }
  return k;
}

// --- materialization ---------------------------------------------------------

namespace {

DecayModel fit_flat_tail(const std::vector<double>& eig, std::optional<double> rate) {
  DecayModel m;
  const std::size_t count = eig.size();
  std::vector<double> xs, ys;
  std::vector<std::size_t> ks;
  for (std::size_t k = count / 2; k < count; ++k) {
    if (eig[k] == 0.0) continue;
    xs.push_back(std::log(static_cast<double>(k + 1)));
    ys.push_back(std::log(std::abs(eig[k])));
    ks.push_back(k);
  }
  if (ks.empty()) return m;
  double delta = 0.0;
  if (rate) {
    delta = *rate;
  } else if (ks.size() >= 2 && xs.front() != xs.back()) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      sxy += (xs[j] - mx) * (ys[j] - my);
      sxx += (xs[j] - mx) * (xs[j] - mx);
    }
    delta = -sxy / sxx;
  }
  m.kind = DecayModel::Kind::polynomial;
  m.rate = delta;
  for (std::size_t j = 0; j < ks.size(); ++j) m.scale = std::max(m.scale, std::exp(ys[j] + delta * xs[j]));
  return m;
}

void materialize_sphere(SpectralKernel& out, int d, const std::vector<double>& level_eigs, bool finite_rank,
                        std::size_t k_max) {
  std::vector<int> order;
  for (std::size_t l = 0; l < level_eigs.size(); ++l)
    if (level_eigs[l] != 0.0 || finite_rank) order.push_back(static_cast<int>(l));
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(level_eigs[static_cast<std::size_t>(a)]) > std::abs(level_eigs[static_cast<std::size_t>(b)]);
  });

  out.eigenvalues.clear();
  out.basis_index.clear();
  out.levels.clear();
  out.sup_norms.clear();
  out.v1_prefix.assign(1, 0.0);
  bool cut_nonzero = false;
  double block_total = 0.0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const int l = order[pos];
    const double value = level_eigs[static_cast<std::size_t>(l)];
    if (out.eigenvalues.size() >= k_max) {
      // Only the truncation flag depends on what is left.
      if (value != 0.0) cut_nonzero = true;
      continue;
    }
    const std::uint64_t dl = sf::harmonic_dim(d, l);
    const double sup = std::sqrt(static_cast<double>(dl));
    const double next_total = block_total + static_cast<double>(dl);
    for (std::uint64_t j = 0; j < dl; ++j) {
      if (out.eigenvalues.size() >= k_max) {
        if (value != 0.0) cut_nonzero = true;
        break;
      }
      out.eigenvalues.push_back(value);
      out.basis_index.push_back(sphere_native_index(d, l, j));
      out.levels.push_back(l);
      out.sup_norms.push_back(sup);
      // Partially included levels are bounded by the full level.
      out.v1_prefix.push_back(next_total);
    }
    block_total = next_total;
  }
  out.finite_rank = finite_rank;
  out.rank = static_cast<std::size_t>(
      std::count_if(out.eigenvalues.begin(), out.eigenvalues.end(), [](double v) { return v != 0.0; }));
  out.truncated = !finite_rank || cut_nonzero;

  out.sup_growth = {};
  const double rate = (d - 2.0) / (2.0 * (d - 1.0));
  out.sup_growth.kind = GrowthModel::Kind::polynomial;
  out.sup_growth.rate = rate;
  for (std::size_t k = 0; k < out.sup_norms.size(); ++k)
    out.sup_growth.scale = std::max(out.sup_growth.scale, out.sup_norms[k] / std::pow(k + 1.0, rate));
  out.sup_norm_source = "analytic: sqrt(d_l) per level (addition theorem)";

  out.tail = {};
  if (out.truncated) {
    std::optional<double> flat_rate;
    if (out.level_decay_exponent) flat_rate = *out.level_decay_exponent / (d - 1.0);
    out.tail = fit_flat_tail(out.eigenvalues, flat_rate);
  }
}

std::function<double(double)> zonal_series(int d, std::vector<double> level_eigs) {
  return [d, level_eigs = std::move(level_eigs)](double t) {
    const double gamma = 0.5 * (d - 2);
    double sum = level_eigs[0];
    double prev = 1.0;
    double cur = 2.0 * gamma * t;
    for (std::size_t l = 1; l < level_eigs.size(); ++l) {
      if (l >= 2) {
        const double k = static_cast<double>(l);
        const double next = (2.0 * t * (k + gamma - 1.0) * cur - (k + 2.0 * gamma - 2.0) * prev) / k;
        prev = cur;
        cur = next;
      }
      if (level_eigs[l] != 0.0) sum += level_eigs[l] * (2.0 * l + d - 2.0) / (d - 2.0) * cur;
    }
    return sum;
  };
}

void add_flag(SpectralKernel& k, std::string flag) {
  if (std::find(k.flags.begin(), k.flags.end(), flag) == k.flags.end()) k.flags.push_back(std::move(flag));
}

// Gaussian measure e^{-x²}/√π: φ_k are the functions of gaussian_eigenfunction.
class GaussianBasis final : public EigenBasis {
 public:
  explicit GaussianBasis(sf::GaussianVariant variant) : variant_(variant) {}

  void evaluate(std::span<const double> point, std::span<const std::size_t> indices,
                std::span<double> out) const override {
    if (indices.empty()) return;
    const std::size_t top = *std::max_element(indices.begin(), indices.end());
    std::vector<double> values(top + 1);
    sf::gaussian_eigenfunctions(static_cast<int>(top + 1), point[0], variant_, values.data());
    for (std::size_t m = 0; m < indices.size(); ++m) out[m] = values[indices[m]];
  }

 private:
  sf::GaussianVariant variant_;
};

SpectralKernel gaussian_kernel(const KernelSpec& spec) {
  const bool narrow = spec.family == KernelSpec::Family::gaussian_narrow;
  const sf::GaussianVariant variant = narrow ? sf::GaussianVariant::narrow : sf::GaussianVariant::wide;
  SpectralKernel k;
  k.id = narrow ? "gaussian_narrow" : "gaussian_wide";
  k.domain = {DomainKind::gaussian_line, 1};
  k.limits = spec.limits;

  const double base = 0.5 * (1.0 + std::numbers::sqrt2) + 0.25;
  const double lambda0 = 1.0 / std::sqrt(base);
  const double ratio = 0.25 / base;
  for (std::size_t j = 0; j < spec.limits.k_max; ++j) {
    const double v = lambda0 * std::pow(ratio, static_cast<double>(j));
    if (v < kRelativeCutoff * lambda0) break;
    k.eigenvalues.push_back(v);
    k.basis_index.push_back(j);
    k.levels.push_back(-1);
  }
  const std::size_t count = k.eigenvalues.size();
  k.truncated = true;
  k.tail.kind = DecayModel::Kind::exponential;
  k.tail.rate = -std::log(ratio);
  k.tail.scale = lambda0 / ratio;  // λ_i = λ_0 q^{i-1}, 1-based i

  // Grid sup-norms; the wide family peaks beyond the turning point.
  const double reach = std::max(12.0, 1.5 * std::sqrt(2.5 * static_cast<double>(count)) + 5.0);
  constexpr int kGrid = 40000;
  std::vector<double> sup(count, 0.0);
  std::vector<double> v1(count + 1, 0.0);
  std::vector<double> values(count);
  for (int g = 0; g <= kGrid; ++g) {
    const double x = -reach + 2.0 * reach * g / kGrid;
    sf::gaussian_eigenfunctions(static_cast<int>(count), x, variant, values.data());
    double cum = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      sup[j] = std::max(sup[j], std::abs(values[j]));
      cum += values[j] * values[j];
      v1[j + 1] = std::max(v1[j + 1], cum);
    }
  }
  k.v1_prefix = std::move(v1);
  std::ostringstream grid;
  grid << "grid: " << (kGrid + 1) << " points on [" << fmt(-reach) << ", " << fmt(reach) << "]";
  if (narrow) {
    k.sup_norms.assign(count, std::pow(2.0, 0.125));
    k.sup_norm_source = "analytic: 2^(1/8) for every k; V1 " + grid.str();
    k.sup_growth = {GrowthModel::Kind::polynomial, std::pow(2.0, 0.125), 0.0};
    k.orthonormal_basis = false;
    add_flag(k, "narrow Hermite functions are not orthonormal under e^{-x^2}/sqrt(pi); the listed eigenvalues "
                "belong to the wide variant");
  } else {
    k.sup_norms = sup;
    k.sup_norm_source = "sup and V1 " + grid.str();
    // log sup_k is close to linear in k; fit the last ten and lift to cover all.
    const std::size_t first = count > 10 ? count - 10 : 0;
    double mx = 0.0, my = 0.0;
    for (std::size_t j = first; j < count; ++j) {
      mx += static_cast<double>(j + 1);
      my += std::log(sup[j]);
    }
    mx /= static_cast<double>(count - first);
    my /= static_cast<double>(count - first);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t j = first; j < count; ++j) {
      sxy += (j + 1.0 - mx) * (std::log(sup[j]) - my);
      sxx += (j + 1.0 - mx) * (j + 1.0 - mx);
    }
    const double rate = sxx > 0.0 ? std::max(0.0, sxy / sxx) : 0.0;
    double scale = 0.0;
    for (std::size_t j = 0; j < count; ++j) scale = std::max(scale, sup[j] / std::exp(rate * (j + 1.0)));
    k.sup_growth = {GrowthModel::Kind::exponential, scale, rate};
  }
  k.basis = std::make_shared<GaussianBasis>(variant);
  return k;
}

SpectralKernel synthetic_kernel(const KernelSpec& spec) {
  const RegularityClass& reg = spec.synthetic;
  if (reg.tag == RegularityClass::Tag::H)
    throw ConfigError("synthetic kernel needs a decay class H1, H2 or H3, not H");
  const std::string violated = reg.constraint_violation();
  if (!violated.empty()) throw ConfigError("synthetic kernel " + reg.describe() + " violates " + violated);
  if (!(spec.synthetic_scale > 0.0)) throw ConfigError("synthetic kernel scale must be positive");

  SpectralKernel k;
  k.id = "synthetic(" + reg.describe() + ", scale=" + fmt(spec.synthetic_scale) + ")";
  k.domain = {DomainKind::abstract, 0};
  k.limits = spec.limits;
  const bool poly_decay = reg.tag == RegularityClass::Tag::H1;
  const bool exp_growth = reg.tag == RegularityClass::Tag::H3;
  k.tail.kind = poly_decay ? DecayModel::Kind::polynomial : DecayModel::Kind::exponential;
  k.tail.scale = spec.synthetic_scale;
  k.tail.rate = reg.delta;
  k.sup_growth.kind = exp_growth ? GrowthModel::Kind::exponential : GrowthModel::Kind::polynomial;
  k.sup_growth.scale = 1.0;
  k.sup_growth.rate = reg.s;

  k.v1_prefix.assign(1, 0.0);
  for (std::size_t i = 1; i <= spec.limits.k_max; ++i) {
    const double v = k.tail.at(static_cast<double>(i));
    if (v < kRelativeCutoff * spec.synthetic_scale || v == 0.0) break;
    const double sup = k.sup_growth.at(static_cast<double>(i));
    k.eigenvalues.push_back(v);
    k.basis_index.push_back(i - 1);
    k.levels.push_back(-1);
    k.sup_norms.push_back(sup);
    k.v1_prefix.push_back(k.v1_prefix.back() + sup * sup);
  }
  k.truncated = true;
  k.sup_norm_source = "declared: " + k.sup_growth.describe() + "; V1 bounded by the sum of squared sup-norms";
  k.orthonormal_basis = true;
  add_flag(k, "abstract domain: no eigenfunctions to sample");
  return k;
}

}  // namespace

SpectralKernel to_spectral(const DotProductKernel& kernel, const MaterializationLimits& limits) {
  if (limits.k_max < 1) throw ConfigError("K_max must be >= 1");
  if (kernel.star_eigenvalues.empty()) throw ConfigError("dot-product kernel has no eigenvalues");
  SpectralKernel k;
  k.id = kernel.id;
  k.domain = {DomainKind::sphere, kernel.dimension};
  k.limits = limits;
  k.level_eigenvalues = kernel.star_eigenvalues;
  k.level_decay_exponent = kernel.level_decay_exponent;
  k.profile = kernel.profile;
  k.satisfies_h = kernel.satisfies_h;
  k.basis = make_sphere_basis(kernel.dimension);
  materialize_sphere(k, kernel.dimension, k.level_eigenvalues, kernel.finite_rank, limits.k_max);
  if (!k.satisfies_h) add_flag(k, "violates hypothesis H: sum of |lambda_k| ||phi_k||_inf^2 diverges");
  return k;
}

SpectralKernel compose_power(const SpectralKernel& kernel, int m) {
  if (m < 1) throw ConfigError("composition power m must be >= 1");
  if (m == 1) return kernel;
  SpectralKernel k = kernel;
  k.id = kernel.id + "^o" + std::to_string(m);
  k.flags.clear();

  if (kernel.domain.kind == DomainKind::sphere && !kernel.level_eigenvalues.empty()) {
    const int d = kernel.domain.dimension;
    for (double& v : k.level_eigenvalues) v = std::pow(v, m);
    if (kernel.level_decay_exponent) k.level_decay_exponent = *kernel.level_decay_exponent * m;
    materialize_sphere(k, d, k.level_eigenvalues, kernel.finite_rank, kernel.limits.k_max);
    k.profile = zonal_series(d, k.level_eigenvalues);
    if (!kernel.finite_rank)
      add_flag(k, "profile evaluated as the zonal series truncated at L_max = " +
                      std::to_string(k.level_eigenvalues.size() - 1));
    // Σ_l |λ*_l|^m d_l converges once the level decay beats the multiplicity growth.
    if (k.level_decay_exponent) k.satisfies_h = *k.level_decay_exponent > d - 1.0;
    else if (!kernel.satisfies_h) k.satisfies_h = false;
    if (!k.satisfies_h) add_flag(k, "violates hypothesis H: sum of |lambda_k| ||phi_k||_inf^2 diverges");
    return k;
  }

  const std::size_t count = kernel.eigenvalues.size();
  std::vector<double> powered(count);
  for (std::size_t j = 0; j < count; ++j) powered[j] = std::pow(kernel.eigenvalues[j], m);
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(powered[a]) > std::abs(powered[b]); });
  bool identity = true;
  for (std::size_t j = 0; j < count; ++j) {
    identity = identity && idx[j] == j;
    k.eigenvalues[j] = powered[idx[j]];
    k.basis_index[j] = kernel.basis_index[idx[j]];
    k.levels[j] = kernel.levels[idx[j]];
    k.sup_norms[j] = kernel.sup_norms[idx[j]];
  }
  if (!identity) {
    k.v1_prefix.assign(1, 0.0);
    for (double s : k.sup_norms) k.v1_prefix.push_back(k.v1_prefix.back() + s * s);
    k.sup_norm_source += "; V1 re-bounded by the sum of squared sup-norms after reordering";
  }
  if (k.tail.kind != DecayModel::Kind::none) {
    k.tail.scale = std::pow(k.tail.scale, m);
    k.tail.rate *= m;
  }
  for (const std::string& f : kernel.flags) add_flag(k, f);
  return k;
}

SpectralKernel named_kernel(const KernelSpec& spec) {
  using F = KernelSpec::Family;
  if (spec.compose < 1) throw ConfigError("compose must be >= 1");
  if (spec.limits.k_max < 1) throw ConfigError("K_max must be >= 1");
  SpectralKernel k;
  switch (spec.family) {
    case F::gaussian_narrow:
    case F::gaussian_wide:
      k = gaussian_kernel(spec);
      break;
    case F::synthetic:
      k = synthetic_kernel(spec);
      break;
    default:
      k = to_spectral(dot_product_kernel(spec), spec.limits);
      break;
  }
  if (spec.compose == 1) return k;
  SpectralKernel composed = compose_power(k, spec.compose);
  if (spec.family == F::threshold && spec.compose == 2) {
    // ∫ 1{⟨x,z⟩≥0} 1{⟨z,y⟩≥0} dσ(z) = (π − arccos⟨x,y⟩)/(2π)
    composed.profile = [](double t) { return (std::numbers::pi - std::acos(std::clamp(t, -1.0, 1.0))) / (2.0 * std::numbers::pi); };
    composed.flags.erase(std::remove_if(composed.flags.begin(), composed.flags.end(),
                                        [](const std::string& f) { return f.rfind("profile evaluated", 0) == 0; }),
                         composed.flags.end());
  }
  return composed;
}

// --- regularity --------------------------------------------------------------

RegularityFit classify_regularity(const SpectralKernel& kernel, std::span<const RegularityClass> candidates,
                                  std::size_t first, std::size_t last) {
  if (first < 1) throw ConfigError("classify_regularity: indices are 1-based");
  if (last == 0 || last > kernel.materialized()) last = kernel.materialized();
  if (last < first) throw ConfigError("classify_regularity: empty index window");

  std::vector<double> is, logi, logl;
  for (std::size_t i = first; i <= last; ++i) {
    const double v = std::abs(kernel.eigenvalues[i - 1]);
    if (v == 0.0) continue;
    is.push_back(static_cast<double>(i));
    logi.push_back(std::log(static_cast<double>(i)));
    logl.push_back(std::log(v));
  }
  std::vector<double> distinct = logl;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2)
    throw ConfigError("classify_regularity: degenerate fit, fewer than 2 distinct |lambda| values in [" +
                      std::to_string(first) + ", " + std::to_string(last) + "]");

  auto fit = [&](const std::vector<double>& xs, double& slope) {
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(logl.begin(), logl.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      sxy += (xs[j] - mx) * (logl[j] - my);
      sxx += (xs[j] - mx) * (xs[j] - mx);
    }
    slope = sxy / sxx;
    double ss = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double r = logl[j] - (my + slope * (xs[j] - mx));
      ss += r * r;
    }
    return std::sqrt(ss / n);
  };

  RegularityFit out;
  out.first_index = first;
  out.last_index = last;
  out.points = is.size();
  double slope = 0.0;
  out.polynomial_residual = fit(logi, slope);
  out.polynomial_delta = -slope;
  out.exponential_residual = fit(is, slope);
  out.exponential_delta = -slope;
  if (out.points < 20) out.note = "fewer than 20 nonzero eigenvalues in the window; fit is indicative only";

  const bool polynomial = out.polynomial_residual <= out.exponential_residual;
  auto matches = [&](const RegularityClass& c) {
    return polynomial ? c.tag == RegularityClass::Tag::H1
                      : (c.tag == RegularityClass::Tag::H2 || c.tag == RegularityClass::Tag::H3);
  };
  auto it = std::find_if(candidates.begin(), candidates.end(), matches);
  if (it != candidates.end()) {
    out.best = *it;
  } else {
    out.best = RegularityClass{polynomial ? RegularityClass::Tag::H1 : RegularityClass::Tag::H2, 0.0, 0};
    if (!out.note.empty()) out.note += "; ";
    out.note += "no candidate of the fitted family; using s = 0";
  }
  out.best.delta = polynomial ? out.polynomial_delta : out.exponential_delta;
  const std::string violated = out.best.constraint_violation();
  out.constraints_ok = violated.empty();
  if (!violated.empty()) {
    if (!out.note.empty()) out.note += "; ";
    out.note += "fitted class violates " + violated;
  }
  return out;
}

double sobolev_to_delta(double p, int d, double epsilon) {
  if (!(p > 0.0)) throw ConfigError("sobolev_to_delta: p must be positive");
  if (d < 3) throw ConfigError("sobolev_to_delta: d must be >= 3");
  if (!(epsilon >= 0.0)) throw ConfigError("sobolev_to_delta: epsilon must be nonnegative");
  return (p + epsilon) / (d - 1.0) + 0.5;
}

}  // namespace kernspec
