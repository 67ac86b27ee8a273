// kernspec command-line front end.
//
//   kernspec <eigs|deviation|coverage|compare|bounds|rates> --config run.json
//            [--seed U64] [--out DIR] [--threads N]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "kernspec/bounds.hpp"
#include "kernspec/config.hpp"
#include "kernspec/errors.hpp"
#include "kernspec/experiments.hpp"
#include "kernspec/kernelmodel.hpp"
#include "kernspec/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kernspec;

namespace {

class Output {
 public:
  explicit Output(const fs::path& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_))
      throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    std::cout << p.string() << "\n";
    return out;
  }

  void close(std::ofstream& out, const std::string& name) {
    out.close();
    if (!out) throw ConfigError("failed writing " + (dir_ / name).string());
  }

  void write_json(const std::string& name, const json& doc) {
    auto out = open(name);
    out << sanitize(doc).dump(2) << "\n";
    close(out, name);
  }

 private:
  fs::path dir_;
};

std::size_t env_threads() {
  const char* v = std::getenv("KERNSPEC_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(v, &end, 10);
  if (*end != '\0' || n == 0) throw ConfigError("KERNSPEC_THREADS must be a positive integer");
  return static_cast<std::size_t>(n);
}

json with_config(const std::string& kind, const json& config, const std::string& key, json body) {
  json doc = envelope(kind, config);
  doc[key] = std::move(body);
  return doc;
}

void cmd_eigs(const RunConfig& cfg, const json& resolved, Output& out) {
  const SpectralKernel kernel = named_kernel(cfg.kernel);
  json body = kernel_json(kernel);
  body["eigenvalues"] = kernel.eigenvalues;
  out.write_json("eigs.json", with_config("eigs", resolved, "kernel", body));
  auto csv = out.open("eigs.csv");
  write_csv_preamble(csv, "eigs", resolved);
  write_eigs_csv(csv, kernel);
  out.close(csv, "eigs.csv");
}

void write_study(const StudyResult& study, const std::string& kind, const json& resolved, Output& out) {
  out.write_json(kind + "_summary.json", with_config(kind, resolved, "study", study_json(study)));
  auto csv = out.open(kind + "_trials.csv");
  write_csv_preamble(csv, kind, resolved);
  write_trials_csv(csv, study);
  out.close(csv, kind + "_trials.csv");
}

void cmd_deviation(const RunConfig& cfg, const json& resolved, Output& out) {
  const SpectralKernel kernel = named_kernel(cfg.kernel);
  StudyOptions opt{cfg.threads};
  EnvelopeReference ref;
  std::string ref_name;
  if (cfg.envelope_exponential_rate) {
    const double rate = *cfg.envelope_exponential_rate;
    ref = [rate](std::size_t n, std::size_t i) {
      return std::exp(-rate * static_cast<double>(i)) / std::sqrt(static_cast<double>(n));
    };
    ref_name = "exp(-" + format_double(rate) + " i) n^(-1/2)";
  }
  const StudyResult study =
      deviation_study(kernel, cfg.n_grid, cfg.indices, cfg.trials, cfg.alpha, cfg.seed, opt, ref, ref_name);
  write_study(study, "deviation", resolved, out);
}

void cmd_coverage(const RunConfig& cfg, const json& resolved, Output& out) {
  if (cfg.R == 0) throw ConfigError("coverage needs config.R >= 1");
  const SpectralKernel kernel = named_kernel(cfg.kernel);
  CoverageOptions cov;
  cov.residual_norms = cfg.residual_norms;
  const StudyResult study =
      coverage_study(kernel, cfg.n, cfg.R, cfg.alpha, cfg.trials, cfg.seed, StudyOptions{cfg.threads}, cov);
  write_study(study, "coverage", resolved, out);
}

void cmd_compare(const RunConfig& cfg, const json& resolved, Output& out) {
  const SpectralKernel kernel = named_kernel(cfg.kernel);
  const StudyResult study =
      relative_vs_absolute(kernel, cfg.n, cfg.trials, cfg.indices, cfg.seed, StudyOptions{cfg.threads});
  write_study(study, "compare", resolved, out);
}

void cmd_bounds(const RunConfig& cfg, const json& resolved, Output& out) {
  const SpectralKernel kernel = named_kernel(cfg.kernel);
  const BoundReport report = bound_report(kernel, cfg.n, cfg.alpha, cfg.i, cfg.R, cfg.regularity);
  json body = bound_json(report);
  if (cfg.regularity && cfg.regularity->tag == RegularityClass::Tag::H1) {
    const RateTable row = emit_rate_table({*cfg.regularity}, cfg.rate_betas);
    body["rate_row"] = rate_table_json(row);
  }
  body["kernel"] = kernel_json(kernel);
  out.write_json("bounds.json", with_config("bounds", resolved, "report", body));
}

void cmd_rates(const RunConfig& cfg, const json& resolved, Output& out) {
  std::vector<RegularityClass> rows;
  for (double delta : cfg.rate_deltas) rows.push_back({RegularityClass::Tag::H1, delta, cfg.rate_s});
  const RateTable table = emit_rate_table(rows, cfg.rate_betas);
  auto csv = out.open("rates.csv");
  write_csv_preamble(csv, "rates", resolved);
  for (const auto& note : table.notes) csv << "# note: " << note << "\n";
  write_rate_table_csv(csv, table);
  out.close(csv, "rates.csv");
  out.write_json("rates.json", with_config("rates", resolved, "table", rate_table_json(table)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-matrix spectra: operator eigenvalues, Monte Carlo deviation studies and bounds"};
  app.set_version_flag("--version", version());
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
  app.add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override config.seed");
  app.add_option("--out", out_dir, "output directory (overrides config.output_dir)");
  app.add_option("--threads", threads, "worker threads (fallback: KERNSPEC_THREADS, then config.threads)")
      ->check(CLI::PositiveNumber);
  app.require_subcommand(1);
  const char* names[] = {"eigs", "deviation", "coverage", "compare", "bounds", "rates"};
  const char* help[] = {"operator eigenvalues with multiplicities",
                        "per-index deviation study over an n grid",
                        "coverage of the Gram and noise-term bounds",
                        "relative per-index deviations against the delta_2 benchmark",
                        "variance proxies, noise terms, R(i) and rate rows",
                        "rate-exponent table"};
  for (int k = 0; k < 6; ++k) app.add_subcommand(names[k], help[k])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = load_config(config_path);
    cfg.study = cmd;
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    if (threads) {
      cfg.threads = *threads;
    } else if (const std::size_t t = env_threads(); t > 0) {
      cfg.threads = t;
    }
    const json resolved = to_json(cfg);
    Output out(cfg.output_dir);
    if (cmd == "eigs") cmd_eigs(cfg, resolved, out);
    else if (cmd == "deviation") cmd_deviation(cfg, resolved, out);
    else if (cmd == "coverage") cmd_coverage(cfg, resolved, out);
    else if (cmd == "compare") cmd_compare(cfg, resolved, out);
    else if (cmd == "bounds") cmd_bounds(cfg, resolved, out);
    else cmd_rates(cfg, resolved, out);
  } catch (const ConfigError& e) {
    std::cerr << "kernspec " << cmd << ": configuration error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "kernspec " << cmd << ": numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "kernspec " << cmd << ": " << e.what() << "\n";
    return 3;
  }
  return 0;
}
