#include "syncon/reference.hpp"

#include "syncon/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace syncon {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& text, int line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::ParseError,
                "reference line " + std::to_string(line) + ": bad number '" + text + "'");
  }
  return value;
}

double component(const Eigen::VectorXd& v, Eigen::Index i, std::string_view stat) {
  if (i >= v.size()) {
    throw Error(ErrorCode::InvalidArgument, "summary has no component for " + std::string(stat));
  }
  return v[i];
}

const Eigen::VectorXd& require(const std::optional<Eigen::VectorXd>& v, std::string_view stat) {
  if (!v) throw Error(ErrorCode::InvalidArgument, "summary carries no covariate statistics for " + std::string(stat));
  return *v;
}

}  // namespace

ReferenceTable parse_reference(std::istream& in) {
  ReferenceTable table;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 6) {
      throw Error(ErrorCode::ParseError, "reference line " + std::to_string(number) +
                                             ": expected 6 comma-separated fields");
    }
    ReferenceCell cell;
    cell.panel = fields[0];
    cell.estimator = fields[1];
    const double j = parse_double(fields[2], number);
    if (j < 1 || j != std::floor(j)) {
      throw Error(ErrorCode::ParseError, "reference line " + std::to_string(number) + ": J must be a positive integer");
    }
    cell.J = static_cast<int>(j);
    cell.statistic = fields[3];
    cell.value = parse_double(fields[4], number);
    cell.tolerance = parse_double(fields[5], number);
    if (cell.tolerance < 0.0) {
      throw Error(ErrorCode::ParseError, "reference line " + std::to_string(number) + ": negative tolerance");
    }
    table.cells.push_back(std::move(cell));
  }
  return table;
}

ReferenceTable load_reference(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open reference file " + path.string());
  return parse_reference(in);
}

std::string panel_label(const ScenarioConfig& s) {
  // Labelled by the resolved T0, so an explicit T0 of J + 5 still reads "A".
  const int t0 = s.T0();
  if (t0 == s.J + 5) return "A";
  if (t0 == 2 * s.J) return "B";
  return "T0=" + std::to_string(t0);
}

double summary_statistic(const EstimatorSummary& s, std::string_view stat) {
  if (stat == "mean_mu1") return component(s.mean_mu, 0, stat);
  if (stat == "sd_mu1") return component(s.sd_mu, 0, stat);
  if (stat == "mean_mu2") return component(s.mean_mu, 1, stat);
  if (stat == "sd_mu2") return component(s.sd_mu, 1, stat);
  if (stat == "mean_z1") return component(require(s.mean_z, stat), 0, stat);
  if (stat == "sd_z1") return component(require(s.sd_z, stat), 0, stat);
  if (stat == "mean_z2") return component(require(s.mean_z, stat), 1, stat);
  if (stat == "sd_z2") return component(require(s.sd_z, stat), 1, stat);
  if (stat == "sd_alpha") return s.sd_alpha1;
  if (stat == "mean_alpha") return s.mean_alpha1;
  if (stat == "mean_pre_mse") return s.mean_pre_mse;
  if (stat == "mean_l2") return s.mean_l2;
  if (stat == "mean_mu_error_l2") return s.mean_mu_error_l2;
  throw Error(ErrorCode::InvalidArgument, "unknown statistic '" + std::string(stat) + "'");
}

std::vector<CellComparison> ComparisonReport::worst(std::size_t n) const {
  std::vector<CellComparison> sorted = cells;
  auto badness = [](const CellComparison& c) {
    return c.cell.tolerance > 0.0 ? c.deviation / c.cell.tolerance
                                  : (c.deviation > 0.0 ? INFINITY : 0.0);
  };
  std::stable_sort(sorted.begin(), sorted.end(),
                   [&](const auto& a, const auto& b) { return badness(a) > badness(b); });
  if (sorted.size() > n) sorted.resize(n);
  return sorted;
}

ComparisonReport compare_to_reference(const std::vector<McSummary>& summaries,
                                      const ReferenceTable& reference) {
  ComparisonReport report;
  for (const McSummary& summary : summaries) {
    const std::string panel = panel_label(summary.scenario);
    for (const auto& [id, est] : summary.per_estimator) {
      const std::string_view name = to_string(id);
      bool matched = false;
      for (const ReferenceCell& cell : reference.cells) {
        if (cell.panel != panel || cell.J != summary.scenario.J || cell.estimator != name) continue;
        matched = true;
        CellComparison cmp;
        cmp.cell = cell;
        cmp.observed = summary_statistic(est, cell.statistic);
        cmp.deviation = std::abs(cmp.observed - cell.value);
        cmp.pass = cmp.deviation <= cell.tolerance;
        report.all_pass = report.all_pass && cmp.pass;
        report.max_deviation = std::max(report.max_deviation, cmp.deviation);
        report.cells.push_back(std::move(cmp));
      }
      if (!matched) {
        throw Error(ErrorCode::MissingReferenceCell,
                    "no reference cells for panel " + panel + ", estimator " + std::string(name) +
                        ", J=" + std::to_string(summary.scenario.J));
      }
    }
  }
  return report;
}

ComparisonReport compare_to_reference(const McSummary& summary, const ReferenceTable& reference) {
  return compare_to_reference(std::vector<McSummary>{summary}, reference);
}

std::string format_report(const ComparisonReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(6) << "panel" << std::setw(20) << "estimator" << std::setw(6) << "J"
      << std::setw(18) << "statistic" << std::right << std::setw(10) << "reference" << std::setw(10)
      << "observed" << std::setw(10) << "dev" << std::setw(10) << "tol" << "  result\n";
  out << std::fixed << std::setprecision(4);
  for (const CellComparison& c : report.cells) {
    out << std::left << std::setw(6) << c.cell.panel << std::setw(20) << c.cell.estimator
        << std::setw(6) << c.cell.J << std::setw(18) << c.cell.statistic << std::right
        << std::setw(10) << c.cell.value << std::setw(10) << c.observed << std::setw(10)
        << c.deviation << std::setw(10) << c.cell.tolerance << "  " << (c.pass ? "PASS" : "FAIL")
        << '\n';
  }
  const auto failed = std::count_if(report.cells.begin(), report.cells.end(),
                                    [](const CellComparison& c) { return !c.pass; });
  out << report.cells.size() - failed << '/' << report.cells.size() << " cells within tolerance\n";
  return out.str();
}

}  // namespace syncon
