#pragma once

// Published-table reference values and the comparison of Monte Carlo
// summaries against them.
//
// File format: one record per line,
//   panel,estimator,J,statistic,value,tolerance
// with '#' starting a comment. `panel` is "A" (T0 = J + 5) or "B" (T0 = 2J).

#include "syncon/montecarlo.hpp"

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace syncon {

struct ReferenceCell {
  std::string panel;
  std::string estimator;
  int J = 0;
  std::string statistic;
  double value = 0.0;
  double tolerance = 0.0;  // absolute
};

struct ReferenceTable {
  std::vector<ReferenceCell> cells;
};

ReferenceTable parse_reference(std::istream& in);
ReferenceTable load_reference(const std::filesystem::path& path);

/// "A" when T0 = J + 5, "B" when T0 = 2J (however the rule was written),
/// "T0=<n>" otherwise.
std::string panel_label(const ScenarioConfig& s);

/// Statistic names understood in reference files:
///   mean_mu1 sd_mu1 mean_mu2 sd_mu2 mean_z1 sd_z1 mean_z2 sd_z2
///   sd_alpha mean_alpha mean_pre_mse mean_l2 mean_mu_error_l2
/// Throws InvalidArgument for an unknown name or a statistic the summary
/// does not carry.
double summary_statistic(const EstimatorSummary& s, std::string_view statistic);

struct CellComparison {
  ReferenceCell cell;
  double observed = 0.0;
  double deviation = 0.0;  // |observed - value|
  bool pass = false;
};

struct ComparisonReport {
  std::vector<CellComparison> cells;  // in reference-file order
  bool all_pass = true;
  double max_deviation = 0.0;

  /// Cells ordered by deviation / tolerance, largest first.
  std::vector<CellComparison> worst(std::size_t n) const;
};

/// Compares every reference cell matching the summary's panel, J and
/// estimators. Throws MissingReferenceCell when an estimator in the summary
/// has no reference cells at all.
ComparisonReport compare_to_reference(const McSummary& summary, const ReferenceTable& reference);
ComparisonReport compare_to_reference(const std::vector<McSummary>& summaries,
                                      const ReferenceTable& reference);

std::string format_report(const ComparisonReport& report);

}  // namespace syncon
