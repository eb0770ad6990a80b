#pragma once

// File formats: wide panel CSV, covariate CSV, scenario configs, JSON
// results and run manifests.

#include "syncon/dgp.hpp"
#include "syncon/estimators.hpp"
#include "syncon/montecarlo.hpp"
#include "syncon/reference.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace syncon {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Panels

struct PanelCsvOptions {
  int T0 = 0;  // rows at or before the treatment boundary
  std::optional<std::filesystem::path> covariates;
};

/// Wide format: header `time,unit0,unit1,...`; one row per period with
/// strictly increasing time. Column "unit0" becomes the treated unit; the
/// remaining unit columns keep their file order. `unit_names`, when given,
/// receives the unit names in panel order.
PanelData parse_panel_csv(std::istream& in, int T0,
                          std::vector<std::string>* unit_names = nullptr);
PanelData parse_panel_csv(const std::filesystem::path& path, const PanelCsvOptions& opts);

/// Covariates: header `unit,<name>,...` then one row per unit. Rows are
/// matched to `unit_names` (treated first) by name.
Eigen::MatrixXd parse_covariates_csv(std::istream& in, const std::vector<std::string>& unit_names);

void write_panel_csv(std::ostream& out, const PanelData& panel);
void write_covariates_csv(std::ostream& out, const Eigen::MatrixXd& Z);

// ---------------------------------------------------------------------------
// Scenario configs: flat key=value lines, '#' comments.
//   kind=two_factor_groups
//   J=100
//   t0_rule=two_times_j
//   seed=20240101
//   replications=1000
//   estimators=sc,ols,ols_addup
//   shock_sd=1

ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig load_scenario(const std::filesystem::path& path);
/// Canonical text: fixed key order, normalised values. Hashing this text
/// gives the config digest.
std::string scenario_to_text(const ScenarioConfig& s);

// ---------------------------------------------------------------------------
// JSON

Json solution_to_json(const WeightSolution& w, const Eigen::VectorXd& alpha_hat);
Json truth_to_json(const FactorModelTruth& truth);
Json summary_to_json(const McSummary& summary);
McSummary summary_from_json(const Json& j);
Json report_to_json(const ComparisonReport& report);

// ---------------------------------------------------------------------------
// Manifests

/// FNV-1a 64-bit digest as 16 lowercase hex digits.
std::string digest_hex(std::string_view text);

struct RunManifest {
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string timestamp;  // UTC, ISO 8601
  std::vector<std::string> outputs;  // file names, relative to the manifest
};

/// UTC time from SOURCE_DATE_EPOCH when set (reproducible builds), else now.
std::string utc_timestamp();

Json manifest_to_json(const RunManifest& m);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace syncon
