#include "kernspec/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "kernspec/errors.hpp"
#include "kernspec/linalg.hpp"
#include "kernspec/montecarlo.hpp"
#include "kernspec/rng.hpp"

namespace kernspec {

namespace {

// Runs fn(0..count-1) on a pool; results land in caller-owned slots, so the
// merge order is the task index. The lowest-index failure is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= count) return;
      try {
        fn(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Adds the trial seed to numerical failures.
template <class Fn>
auto with_seed(std::uint64_t seed, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " (trial seed " + std::to_string(seed) + ")");
  }
}

double median(const std::vector<double>& v) { return quantile(v, 0.5); }

void check_common(const SpectralKernel& kernel, std::size_t trials, double alpha) {
  if (trials < 30) throw ConfigError("studies need at least 30 trials for quantiles (got " + std::to_string(trials) + ")");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (kernel.domain.kind == DomainKind::abstract)
    throw ConfigError("kernel " + kernel.id + " has no sampling domain; Monte Carlo studies need a sphere or line kernel");
}

void check_indices(const SpectralKernel& kernel, const std::vector<std::size_t>& indices, std::size_t min_n) {
  if (indices.empty()) throw ConfigError("no eigenvalue indices requested");
  for (std::size_t i : indices) {
    if (i < 1) throw ConfigError("eigenvalue indices are 1-based");
    if (i > min_n) throw ConfigError("index " + std::to_string(i) + " exceeds the smallest n = " + std::to_string(min_n));
    if (i > kernel.materialized() && kernel.truncated)
      throw ConfigError("index " + std::to_string(i) + " exceeds the materialized K_max");
  }
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  if (m < 2 || y.size() != m) throw ConfigError("line fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) throw ConfigError("line fit needs at least two distinct abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double r = y[k] - fit.intercept - fit.slope * x[k];
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / m);
  return fit;
}

StudyResult deviation_study(const SpectralKernel& kernel, const std::vector<std::size_t>& n_grid,
                            const std::vector<std::size_t>& indices, std::size_t trials, double alpha,
                            std::uint64_t seed, const StudyOptions& options, const EnvelopeReference& reference,
                            const std::string& reference_name) {
  check_common(kernel, trials, alpha);
  if (n_grid.empty()) throw ConfigError("n_grid is empty");
  const std::size_t min_n = *std::min_element(n_grid.begin(), n_grid.end());
  check_indices(kernel, indices, min_n);
  const std::size_t top = *std::max_element(indices.begin(), indices.end());

  StudyResult out;
  out.kind = "deviation";
  out.kernel_id = kernel.id;
  out.alpha = alpha;
  out.seed = seed;
  out.n_grid = n_grid;
  out.indices = indices;
  out.trials.resize(n_grid.size() * trials);

  parallel_for(out.trials.size(), options.threads, [&](std::size_t task) {
    TrialRecord& rec = out.trials[task];
    rec.trial = task;
    rec.seed = substream_seed(seed, task);
    rec.n = n_grid[task / trials];
    rec.kernel_id = kernel.id;
    rec.indices = indices;
    with_seed(rec.seed, [&] {
      const SampleSet sample = sample_points(kernel.domain, rec.n, rec.seed);
      const linalg::SymMatrix tn = kernel_matrix(kernel, sample);
      rec.spectrum = linalg::top_eigenvalues(tn, top).values;
    });
    for (std::size_t i : indices) rec.deviations.push_back(std::abs(rec.spectrum[i - 1] - kernel.lambda(i)));
  });

  // Relative-bound envelopes; kernels outside their hypotheses get a note instead.
  std::optional<VarianceProxies> proxies;
  try {
    proxies.emplace(kernel);
  } catch (const ConfigError& e) {
    out.notes.push_back(std::string("no relative-bound envelope: ") + e.what());
  }
  auto theorem1 = [&](std::size_t n, std::size_t i) -> std::optional<Theorem1Result> {
    if (!proxies) return std::nullopt;
    try {
      return theorem1_bound(kernel, *proxies, i, n, alpha);
    } catch (const ConfigError& e) {
      const std::string note = "index " + std::to_string(i) + ": " + e.what();
      if (std::find(out.notes.begin(), out.notes.end(), note) == out.notes.end()) out.notes.push_back(note);
      return std::nullopt;
    }
  };
  if (!kernel.satisfies_h) out.notes.push_back("kernel " + kernel.id + " violates hypothesis H");

  for (std::size_t g = 0; g < n_grid.size(); ++g)
    for (std::size_t m = 0; m < indices.size(); ++m) {
      std::vector<double> dev;
      dev.reserve(trials);
      for (std::size_t t = 0; t < trials; ++t) dev.push_back(out.trials[g * trials + t].deviations[m]);
      IndexSummary s;
      s.n = n_grid[g];
      s.i = indices[m];
      s.lambda = kernel.lambda(s.i);
      s.trials = trials;
      for (double v : dev) s.mean += v;
      s.mean /= static_cast<double>(trials);
      s.median = median(dev);
      s.q25 = quantile(dev, 0.25);
      s.q75 = quantile(dev, 0.75);
      s.upper = quantile(dev, 1.0 - alpha);
      if (const auto t1 = theorem1(s.n, s.i)) {
        s.envelope = t1->envelope;
        s.pre_asymptotic = t1->pre_asymptotic;
        s.blocking = t1->blocking;
      }
      out.summaries.push_back(s);
    }

  if (n_grid.size() >= 2) {
    // Medians below this are eigensolver rounding, not sampling error.
    const double rounding_floor = 1e-12 * std::abs(kernel.lambda(1));
    for (std::size_t m = 0; m < indices.size(); ++m) {
      SlopeFit fit;
      fit.i = indices[m];
      fit.n_grid = n_grid;
      std::vector<double> x, y;
      for (std::size_t g = 0; g < n_grid.size(); ++g) {
        const double med = out.summaries[g * indices.size() + m].median;
        if (!(med > rounding_floor)) fit.degenerate = true;
        x.push_back(std::log(static_cast<double>(n_grid[g])));
        y.push_back(std::log(med));
      }
      if (fit.degenerate) {
        fit.slope = std::numeric_limits<double>::quiet_NaN();
        fit.intercept = std::numeric_limits<double>::quiet_NaN();
        fit.note = "median deviation is zero up to rounding (<= 1e-12 |lambda_1|) at some n; log-log slope undefined";
      } else {
        const LineFit line = least_squares_line(x, y);
        fit.slope = line.slope;
        fit.intercept = line.intercept;
        fit.residual = line.rms_residual;
      }
      out.slopes.push_back(fit);
    }
  }

  // Envelope: constant from the smallest n, tested at every larger n.
  const std::size_t g0 = static_cast<std::size_t>(std::min_element(n_grid.begin(), n_grid.end()) - n_grid.begin());
  for (std::size_t m = 0; m < indices.size(); ++m) {
    EnvelopeCheck env;
    env.i = indices[m];
    env.calibration_n = n_grid[g0];
    env.reference = reference ? (reference_name.empty() ? "custom" : reference_name) : "theorem1 envelope";
    auto ref = [&](std::size_t n) -> std::optional<double> {
      if (reference) return reference(n, env.i);
      const auto t1 = theorem1(n, env.i);
      if (!t1) return std::nullopt;
      return t1->envelope;
    };
    const auto r0 = ref(env.calibration_n);
    if (!r0 || !(*r0 > 0.0)) {
      env.note = "reference rate unavailable or zero at the calibration n";
      out.envelopes.push_back(env);
      continue;
    }
    for (std::size_t t = 0; t < trials; ++t)
      env.constant = std::max(env.constant, out.trials[g0 * trials + t].deviations[m] / *r0);
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
      if (n_grid[g] <= env.calibration_n) continue;
      const auto r = ref(n_grid[g]);
      if (!r) continue;
      std::size_t within = 0;
      for (std::size_t t = 0; t < trials; ++t)
        if (out.trials[g * trials + t].deviations[m] <= env.constant * *r) ++within;
      env.points.push_back({n_grid[g], *r, static_cast<double>(within) / static_cast<double>(trials)});
    }
    out.envelopes.push_back(env);
  }
  return out;
}

StudyResult coverage_study(const SpectralKernel& kernel, std::size_t n, std::size_t R, double alpha,
                           std::size_t trials, std::uint64_t seed, const StudyOptions& options,
                           const CoverageOptions& coverage) {
  check_common(kernel, trials, alpha);
  if (R < 1 || R >= n)
    throw ConfigError("coverage needs 1 <= R < n (R = " + std::to_string(R) + ", n = " + std::to_string(n) + ")");
  if (R > kernel.materialized()) throw ConfigError("R exceeds the materialized K_max");

  const VarianceProxies proxies(kernel);
  StudyResult out;
  out.kind = "coverage";
  out.kernel_id = kernel.id;
  out.alpha = alpha;
  out.seed = seed;
  out.n_grid = {n};
  out.trials.resize(trials);

  DecomposeOptions dopt;
  dopt.residual_norms = coverage.residual_norms;
  parallel_for(trials, options.threads, [&](std::size_t t) {
    TrialRecord& rec = out.trials[t];
    rec.trial = t;
    rec.seed = substream_seed(seed, t);
    rec.n = n;
    rec.kernel_id = kernel.id;
    with_seed(rec.seed, [&] {
      const SampleSet sample = sample_points(kernel.domain, n, rec.seed);
      const TruncationDecomposition dec = decompose(kernel, sample, R, dopt);
      rec.gram_dev = dec.gram_dev;
      if (dec.residual_norms) {
        rec.a_norm = dec.a_norm;
        rec.er_norm = dec.er_norm;
      }
    });
  });

  CoverageResult gram;
  gram.name = "gram_bernstein";
  gram.bound = gram_bernstein_bound(proxies.v1(R), R, n, alpha);
  gram.tested = trials;
  for (const auto& rec : out.trials)
    if (*rec.gram_dev > gram.bound) ++gram.violations;
  gram.fraction = static_cast<double>(gram.violations) / static_cast<double>(trials);
  out.coverage.push_back(gram);

  if (coverage.residual_norms) {
    const NoiseTerms noise = noise_terms(proxies, n, R, alpha);
    const std::size_t half = trials / 2;
    auto calibrated = [&](const std::string& name, double bound, auto value) {
      CoverageResult c;
      c.name = name;
      c.bound = bound;
      c.tested = trials - half;
      if (bound == 0.0) {
        // Nothing to calibrate: the quantity must vanish.
        for (std::size_t t = half; t < trials; ++t)
          if (value(out.trials[t]) > 1e-10) ++c.violations;
        c.note = "bound is zero; violation means a value above 1e-10";
      } else {
        std::vector<double> ratios;
        for (std::size_t t = 0; t < half; ++t) ratios.push_back(value(out.trials[t]) / bound);
        c.constant = quantile(ratios, 1.0 - alpha);
        for (std::size_t t = half; t < trials; ++t)
          if (value(out.trials[t]) > *c.constant * bound) ++c.violations;
        c.note = "constant is the (1-alpha)-quantile on substreams [0, " + std::to_string(half) +
                 "), tested on the rest";
      }
      c.fraction = static_cast<double>(c.violations) / static_cast<double>(c.tested);
      out.coverage.push_back(c);
    };
    if (noise.tau < 1.0) {
      calibrated("gamma1_vs_A", noise.gamma1 / (1.0 - noise.tau), [](const TrialRecord& r) { return *r.a_norm; });
    } else {
      out.notes.push_back("tau >= 1: the A-norm envelope gamma1/(1-tau) is undefined");
    }
    calibrated("gamma2_vs_ER", noise.gamma2, [](const TrialRecord& r) { return *r.er_norm; });
  }
  return out;
}

StudyResult relative_vs_absolute(const SpectralKernel& kernel, std::size_t n, std::size_t trials,
                                 const std::vector<std::size_t>& indices, std::uint64_t seed,
                                 const StudyOptions& options) {
  check_common(kernel, trials, 0.5);
  check_indices(kernel, indices, n);

  StudyResult out;
  out.kind = "compare";
  out.kernel_id = kernel.id;
  out.seed = seed;
  out.n_grid = {n};
  out.indices = indices;

  // Operator spectrum truncated where |λ_K| < 1e-3 |λ_1|, zero-padded.
  const double cutoff = 1e-3 * std::abs(kernel.eigenvalues.front());
  std::size_t K = 0;
  while (K < kernel.materialized() && std::abs(kernel.eigenvalues[K]) >= cutoff) ++K;
  out.operator_truncation = K;
  if (K == kernel.materialized() && kernel.truncated)
    out.notes.push_back("materialized spectrum ends above the 1e-3 cutoff; the truncation error bound includes the analytic tail");
  try {
    out.truncation_error = std::sqrt(VarianceProxies(kernel).b2(K).total());
  } catch (const ConfigError& e) {
    out.truncation_error = std::numeric_limits<double>::quiet_NaN();
    out.notes.push_back(std::string("truncation error unavailable: ") + e.what());
  }
  const std::vector<double> op(kernel.eigenvalues.begin(), kernel.eigenvalues.begin() + K);

  out.trials.resize(trials);
  parallel_for(trials, options.threads, [&](std::size_t t) {
    TrialRecord& rec = out.trials[t];
    rec.trial = t;
    rec.seed = substream_seed(seed, t);
    rec.n = n;
    rec.kernel_id = kernel.id;
    rec.indices = indices;
    linalg::Spectrum full;
    with_seed(rec.seed, [&] {
      const SampleSet sample = sample_points(kernel.domain, n, rec.seed);
      full = linalg::eigenvalues(kernel_matrix(kernel, sample));
    });
    rec.delta2 = linalg::delta2(op, full.values);
    const std::size_t top = *std::max_element(indices.begin(), indices.end());
    rec.spectrum.assign(full.values.begin(), full.values.begin() + top);
    for (std::size_t i : indices) rec.deviations.push_back(std::abs(full.values[i - 1] - kernel.lambda(i)));
  });

  std::vector<double> d2;
  for (const auto& rec : out.trials) d2.push_back(*rec.delta2);
  const double med_d2 = median(d2);
  for (std::size_t m = 0; m < indices.size(); ++m) {
    ComparisonRow row;
    row.i = indices[m];
    row.lambda = kernel.lambda(row.i);
    std::vector<double> dev, rel;
    for (const auto& rec : out.trials) {
      dev.push_back(rec.deviations[m]);
      if (row.lambda != 0.0) rel.push_back(rec.deviations[m] / std::abs(row.lambda));
    }
    row.median_deviation = median(dev);
    if (!rel.empty()) row.median_relative = median(rel);
    row.median_delta2 = med_d2;
    row.ratio = row.median_deviation > 0.0 ? med_d2 / row.median_deviation : std::numeric_limits<double>::infinity();
    if (row.lambda == 0.0) out.notes.push_back("index " + std::to_string(row.i) + " has lambda = 0; relative column omitted");
    out.comparison.push_back(row);
  }
  return out;
}

RateTable emit_rate_table(const std::vector<RegularityClass>& reg_grid, const std::vector<double>& beta_grid) {
  RateTable table;
  table.rows = reg_grid;
  table.betas = beta_grid;
  bool divergence_noted = false;
  for (const auto& reg : reg_grid) {
    if (reg.tag != RegularityClass::Tag::H1) throw ConfigError("rate tables are defined for H1 only");
    const Rational delta = Rational::from_double(reg.delta);
    std::vector<Rational> row;
    for (double beta : beta_grid) row.push_back(rate_exponent(delta, reg.s, Rational::from_double(beta)));
    table.cells.push_back(std::move(row));
    if (reg.s >= 1 && !divergence_noted) {
      table.notes.push_back(
          "s >= 1 rows follow the rate row formulas literally "
          "(e.g. delta = 4, s = 1, beta = 0.1 gives -0.7)");
      divergence_noted = true;
    }
  }
  return table;
}

}  // namespace kernspec
