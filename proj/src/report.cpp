#include "kernspec/report.hpp"

#include <charconv>
#include <cmath>

#include "kernspec/specfun.hpp"

namespace kernspec {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json tail_json(const VarianceProxies::Tail& t) {
  return json{{"materialized", t.materialized}, {"analytic", t.analytic}, {"total", t.total()}};
}

}  // namespace

std::string version() { return KERNSPEC_VERSION; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

json sanitize(json j) {
  if (j.is_number_float()) {
    const double x = j.get<double>();
    if (!std::isfinite(x)) return format_double(x);
  } else if (j.is_structured()) {
    for (auto& v : j) v = sanitize(std::move(v));
  }
  return j;
}

json envelope(const std::string& kind, const json& config) {
  return json{{"kind", kind}, {"version", version()}, {"config", config}};
}

json kernel_json(const SpectralKernel& k) {
  json j{{"id", k.id},
         {"domain", k.domain.describe()},
         {"materialized", k.materialized()},
         {"truncated", k.truncated},
         {"finite_rank", k.finite_rank},
         {"satisfies_h", k.satisfies_h},
         {"orthonormal_basis", k.orthonormal_basis},
         {"sup_norm_source", k.sup_norm_source},
         {"tail_model", k.truncated ? k.tail.describe() : std::string("none")},
         {"sup_growth_model", k.sup_growth.describe()},
         {"flags", k.flags}};
  if (k.finite_rank) j["rank"] = k.rank;
  if (!k.level_eigenvalues.empty()) {
    json levels = json::array();
    for (std::size_t l = 0; l < k.level_eigenvalues.size(); ++l)
      levels.push_back({{"level", l},
                        {"lambda", k.level_eigenvalues[l]},
                        {"multiplicity", specfun::harmonic_dim(k.domain.dimension, static_cast<int>(l))}});
    j["levels"] = levels;
  }
  // Diagnostic: what the materialized listing leaves out.
  try {
    const VarianceProxies p(k);
    j["tail_mass"] = tail_json(p.b(k.materialized()));
  } catch (const std::exception& e) {
    j["tail_mass"] = std::string("unavailable: ") + e.what();
  }
  return j;
}

json study_json(const StudyResult& s) {
  json j{{"kind", s.kind}, {"kernel_id", s.kernel_id}, {"alpha", s.alpha}, {"seed", s.seed},
         {"n_grid", s.n_grid}, {"indices", s.indices}, {"trials_total", s.trials.size()}, {"notes", s.notes}};
  json summaries = json::array();
  for (const auto& x : s.summaries)
    summaries.push_back({{"n", x.n},
                         {"i", x.i},
                         {"lambda", x.lambda},
                         {"trials", x.trials},
                         {"mean", x.mean},
                         {"median", x.median},
                         {"q25", x.q25},
                         {"q75", x.q75},
                         {"upper_quantile", x.upper},
                         {"theorem1_envelope", optional_number(x.envelope)},
                         {"pre_asymptotic", x.pre_asymptotic},
                         {"blocking", x.blocking}});
  j["summaries"] = summaries;
  json slopes = json::array();
  for (const auto& f : s.slopes)
    slopes.push_back({{"i", f.i},
                      {"n_grid", f.n_grid},
                      {"slope", f.degenerate ? json(nullptr) : json(f.slope)},
                      {"intercept", f.degenerate ? json(nullptr) : json(f.intercept)},
                      {"rms_residual", f.residual},
                      {"degenerate", f.degenerate},
                      {"note", f.note}});
  j["slopes"] = slopes;
  json envs = json::array();
  for (const auto& e : s.envelopes) {
    json pts = json::array();
    for (const auto& p : e.points)
      pts.push_back({{"n", p.n}, {"reference", p.reference}, {"fraction_within", p.fraction_within}});
    envs.push_back({{"i", e.i},
                    {"reference", e.reference},
                    {"calibration_n", e.calibration_n},
                    {"constant", e.constant},
                    {"points", pts},
                    {"note", e.note}});
  }
  j["envelopes"] = envs;
  json cov = json::array();
  for (const auto& c : s.coverage)
    cov.push_back({{"name", c.name},
                   {"bound", c.bound},
                   {"constant", optional_number(c.constant)},
                   {"tested", c.tested},
                   {"violations", c.violations},
                   {"fraction", c.fraction},
                   {"note", c.note}});
  j["coverage"] = cov;
  json cmp = json::array();
  for (const auto& r : s.comparison)
    cmp.push_back({{"i", r.i},
                   {"lambda", r.lambda},
                   {"median_deviation", r.median_deviation},
                   {"median_relative_deviation", optional_number(r.median_relative)},
                   {"median_delta2", r.median_delta2},
                   {"delta2_over_deviation", std::isfinite(r.ratio) ? json(r.ratio) : json(nullptr)}});
  j["comparison"] = cmp;
  if (s.kind == "compare") {
    j["operator_truncation"] = s.operator_truncation;
    j["truncation_error"] = std::isfinite(s.truncation_error) ? json(s.truncation_error) : json(nullptr);
  }
  return j;
}

json bound_json(const BoundReport& r) {
  json j{{"kernel_id", r.kernel_id},
         {"i", r.i},
         {"n", r.n},
         {"alpha", r.alpha},
         {"R", r.R},
         {"k_max", r.k_max},
         {"tail_model", r.tail_model},
         {"bR", tail_json(r.bR)},
         {"b2R", tail_json(r.b2R)},
         {"V1", r.v1},
         {"V1p", r.v1p},
         {"V2", r.v2},
         {"V3", r.v3},
         {"gamma1", r.noise.gamma1},
         {"gamma2", r.noise.gamma2},
         {"tau", r.noise.tau},
         {"gram_bound", r.gram_bound},
         {"n0", r.n0 ? json(*r.n0) : json(nullptr)}};
  j["theorem1"] = {{"Ri", r.theorem1.Ri},
                   {"lambda_i", r.theorem1.lambda_i},
                   {"V1_Ri", r.theorem1.v1},
                   {"envelope", r.theorem1.envelope},
                   {"gamma2_Ri", r.theorem1.gamma2},
                   {"tau_Ri", r.theorem1.tau},
                   {"pre_asymptotic", r.theorem1.pre_asymptotic},
                   {"blocking", r.theorem1.blocking},
                   {"bound", optional_number(r.theorem1.bound())}};
  if (r.regularity)
    j["regularity"] = {{"tag", to_string(r.regularity->tag)}, {"delta", r.regularity->delta}, {"s", r.regularity->s}};
  if (r.theorem2) j["theorem2"] = {{"B", r.theorem2->B}, {"regime", r.theorem2->regime}};
  return j;
}

json rate_table_json(const RateTable& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    json cells = json::array();
    for (std::size_t c = 0; c < t.betas.size(); ++c)
      cells.push_back({{"beta", t.betas[c]}, {"h", t.cells[r][c].to_string()}, {"value", t.cells[r][c].to_double()}});
    rows.push_back({{"delta", t.rows[r].delta}, {"s", t.rows[r].s}, {"cells", cells}});
  }
  return json{{"rows", rows}, {"notes", t.notes}};
}

void write_csv_preamble(std::ostream& out, const std::string& kind, const json& config) {
  out << "# kernspec " << version() << " " << kind << "\n";
  out << "# config: " << config.dump() << "\n";
}

void write_eigs_csv(std::ostream& out, const SpectralKernel& k) {
  out << "index,lambda,level,sup_norm\n";
  for (std::size_t m = 0; m < k.materialized(); ++m)
    out << (m + 1) << ',' << format_double(k.eigenvalues[m]) << ',' << (m < k.levels.size() ? k.levels[m] : -1) << ','
        << format_double(m < k.sup_norms.size() ? k.sup_norms[m] : std::nan("")) << '\n';
}

void write_trials_csv(std::ostream& out, const StudyResult& s) {
  out << "trial,seed,n,kernel,i,lambda_hat,deviation,gram_dev,a_norm,er_norm,delta2\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : s.trials) {
    const std::string tail =
        opt(r.gram_dev) + ',' + opt(r.a_norm) + ',' + opt(r.er_norm) + ',' + opt(r.delta2);
    if (r.indices.empty()) {
      out << r.trial << ',' << r.seed << ',' << r.n << ",\"" << r.kernel_id << "\",,,," << tail << '\n';
      continue;
    }
    for (std::size_t m = 0; m < r.indices.size(); ++m)
      out << r.trial << ',' << r.seed << ',' << r.n << ",\"" << r.kernel_id << "\"," << r.indices[m] << ','
          << format_double(r.spectrum[r.indices[m] - 1]) << ',' << format_double(r.deviations[m]) << ',' << tail
          << '\n';
  }
}

void write_rate_table_csv(std::ostream& out, const RateTable& t) {
  out << "delta,s";
  for (double b : t.betas) out << ",beta=" << format_double(b);
  out << '\n';
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out << format_double(t.rows[r].delta) << ',' << t.rows[r].s;
    for (const auto& cell : t.cells[r]) out << ',' << format_double(cell.to_double());
    out << '\n';
  }
}

}  // namespace kernspec
