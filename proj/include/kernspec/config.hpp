#pragma once

// Run configuration: JSON schema, validation and the resolved form that is
// embedded in every output file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kernspec/kernelmodel.hpp"

namespace kernspec {

struct RunConfig {
  KernelSpec kernel;
  std::string study;  ///< informational; the subcommand decides
  std::vector<std::size_t> n_grid{250, 500, 1000};
  std::size_t n = 1000;
  std::vector<std::size_t> indices{1};
  std::size_t trials = 200;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  std::size_t R = 0;  ///< 0 selects R(i) for bounds
  std::size_t i = 1;
  std::string output_dir = "kernspec_out";
  std::size_t threads = 1;
  bool residual_norms = true;
  std::optional<RegularityClass> regularity;
  std::vector<double> rate_deltas{4, 5, 6, 7, 8};
  int rate_s = 0;
  std::vector<double> rate_betas{0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  /// Envelope reference e^{-rate·i} n^{-1/2} instead of the relative-bound envelope.
  std::optional<double> envelope_exponential_rate;
};

/// Parses and validates a configuration object. Unknown fields anywhere are
/// rejected with ConfigError. Relative `table_csv` paths resolve against
/// `base_dir`.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// The fully resolved configuration, defaults included.
nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const KernelSpec& spec);

/// Reads a two-column CSV profile table "t,f" (a header row is allowed).
std::vector<std::pair<double, double>> read_profile_csv(const std::filesystem::path& path);

}  // namespace kernspec
