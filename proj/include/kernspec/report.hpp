#pragma once

// JSON and CSV emission. Every document carries the artifact version and the
// resolved run configuration; CSV files carry them as leading '#' lines.

#include <ostream>
#include <string>

#include "json.hpp"

#include "kernspec/bounds.hpp"
#include "kernspec/experiments.hpp"
#include "kernspec/kernelmodel.hpp"

namespace kernspec {

std::string version();

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite.
std::string format_double(double x);

/// Replaces non-finite numbers (which JSON cannot hold) by "nan"/"inf"/"-inf".
nlohmann::json sanitize(nlohmann::json j);

nlohmann::json envelope(const std::string& kind, const nlohmann::json& config);

nlohmann::json kernel_json(const SpectralKernel& kernel);
nlohmann::json study_json(const StudyResult& study);
nlohmann::json bound_json(const BoundReport& report);
nlohmann::json rate_table_json(const RateTable& table);

void write_csv_preamble(std::ostream& out, const std::string& kind, const nlohmann::json& config);
/// index,lambda,level,sup_norm
void write_eigs_csv(std::ostream& out, const SpectralKernel& kernel);
/// One row per trial per index.
void write_trials_csv(std::ostream& out, const StudyResult& study);
/// delta,s,beta=...; cells are the exact rationals in decimal form.
void write_rate_table_csv(std::ostream& out, const RateTable& table);

}  // namespace kernspec
