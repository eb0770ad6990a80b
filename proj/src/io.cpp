#include "syncon/io.hpp"

#include "syncon/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace syncon {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool looks_non_finite(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  std::string_view body = lower;
  if (!body.empty() && (body.front() == '+' || body.front() == '-')) body.remove_prefix(1);
  return body.starts_with("nan") || body.starts_with("inf");
}

std::string cell_position(int row, const std::string& column) {
  return "row " + std::to_string(row) + ", column \"" + column + "\"";
}

double parse_cell(const std::string& text, int row, const std::string& column) {
  if (looks_non_finite(text)) {
    throw Error(ErrorCode::NonFiniteCell, "non-finite value '" + text + "' at " + cell_position(row, column));
  }
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ParseError, "cannot parse '" + text + "' at " + cell_position(row, column));
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::NonFiniteCell, "non-finite value '" + text + "' at " + cell_position(row, column));
  }
  return value;
}

bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!trim(line).empty()) return true;
  }
  return false;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

Json optional_vector_json(const std::optional<Eigen::VectorXd>& v) {
  return v ? vector_json(*v) : Json(nullptr);
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format number");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------

PanelData parse_panel_csv(std::istream& in, int T0, std::vector<std::string>* unit_names) {
  std::string line;
  if (!next_content_line(in, line)) throw Error(ErrorCode::ParseError, "panel file is empty");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header.front() != "time") {
    throw Error(ErrorCode::ParseError, "panel header must start with 'time'");
  }
  std::vector<std::string> units(header.begin() + 1, header.end());
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i].empty()) throw Error(ErrorCode::ParseError, "empty unit name in header");
    if (std::find(units.begin(), units.begin() + static_cast<std::ptrdiff_t>(i), units[i]) !=
        units.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw Error(ErrorCode::ParseError, "duplicate unit column '" + units[i] + "'");
    }
  }
  const auto treated = std::find(units.begin(), units.end(), "unit0");
  if (treated == units.end()) {
    throw Error(ErrorCode::MissingTreatedColumn, "panel header has no 'unit0' column");
  }
  // Panel column order: unit0 first, then the others in file order.
  std::vector<std::size_t> file_to_panel(units.size());
  const auto treated_index = static_cast<std::size_t>(treated - units.begin());
  std::vector<std::string> ordered{units[treated_index]};
  for (std::size_t i = 0, next = 1; i < units.size(); ++i) {
    if (i == treated_index) {
      file_to_panel[i] = 0;
    } else {
      file_to_panel[i] = next++;
      ordered.push_back(units[i]);
    }
  }

  std::vector<std::vector<double>> rows;
  double last_time = -INFINITY;
  int row = 0;
  while (next_content_line(in, line)) {
    ++row;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": expected " +
                                             std::to_string(header.size()) + " fields, found " +
                                             std::to_string(fields.size()));
    }
    const double time = parse_cell(fields[0], row, "time");
    if (!(time > last_time)) {
      throw Error(ErrorCode::NonMonotoneTime,
                  "time must be strictly increasing (row " + std::to_string(row) + ")");
    }
    last_time = time;
    std::vector<double> values(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
      values[file_to_panel[i]] = parse_cell(fields[i + 1], row, units[i]);
    }
    rows.push_back(std::move(values));
  }

  const int periods = static_cast<int>(rows.size());
  if (T0 < 1 || T0 > periods) {
    throw Error(ErrorCode::InvalidArgument, "T0 must lie in [1, " + std::to_string(periods) +
                                                "] for this panel (got " + std::to_string(T0) + ")");
  }
  PanelData panel;
  panel.y.resize(periods, static_cast<Eigen::Index>(units.size()));
  for (int t = 0; t < periods; ++t) {
    for (std::size_t i = 0; i < units.size(); ++i) panel.y(t, static_cast<Eigen::Index>(i)) = rows[t][i];
  }
  panel.T0 = T0;
  panel.T1 = periods - T0;
  panel.validate();
  if (unit_names) *unit_names = std::move(ordered);
  return panel;
}

PanelData parse_panel_csv(const std::filesystem::path& path, const PanelCsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open panel file " + path.string());
  std::vector<std::string> names;
  PanelData panel = parse_panel_csv(in, opts.T0, &names);
  if (opts.covariates) {
    std::ifstream cin(*opts.covariates);
    if (!cin) throw Error(ErrorCode::Io, "cannot open covariate file " + opts.covariates->string());
    panel.covariates = parse_covariates_csv(cin, names);
    panel.validate();
  }
  return panel;
}

Eigen::MatrixXd parse_covariates_csv(std::istream& in, const std::vector<std::string>& unit_names) {
  std::string line;
  if (!next_content_line(in, line)) throw Error(ErrorCode::ParseError, "covariate file is empty");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header.front() != "unit") {
    throw Error(ErrorCode::ParseError, "covariate header must be 'unit,<name>,...'");
  }
  const auto q = static_cast<Eigen::Index>(header.size() - 1);
  std::unordered_map<std::string, Eigen::Index> position;
  for (std::size_t i = 0; i < unit_names.size(); ++i) position[unit_names[i]] = static_cast<Eigen::Index>(i);

  Eigen::MatrixXd Z(static_cast<Eigen::Index>(unit_names.size()), q);
  std::vector<bool> seen(unit_names.size(), false);
  int row = 0;
  while (next_content_line(in, line)) {
    ++row;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "covariate row " + std::to_string(row) + ": wrong field count");
    }
    const auto it = position.find(fields[0]);
    if (it == position.end()) {
      throw Error(ErrorCode::ParseError, "covariate row " + std::to_string(row) + ": unknown unit '" + fields[0] + "'");
    }
    if (seen[static_cast<std::size_t>(it->second)]) {
      throw Error(ErrorCode::ParseError, "covariate file lists unit '" + fields[0] + "' twice");
    }
    seen[static_cast<std::size_t>(it->second)] = true;
    for (Eigen::Index k = 0; k < q; ++k) {
      Z(it->second, k) = parse_cell(fields[static_cast<std::size_t>(k) + 1], row, header[static_cast<std::size_t>(k) + 1]);
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw Error(ErrorCode::ParseError, "covariate file has no row for unit '" + unit_names[i] + "'");
  }
  return Z;
}

void write_panel_csv(std::ostream& out, const PanelData& panel) {
  out << "time";
  for (Eigen::Index i = 0; i < panel.y.cols(); ++i) out << ",unit" << i;
  out << '\n';
  for (Eigen::Index t = 0; t < panel.y.rows(); ++t) {
    out << (t + 1);
    for (Eigen::Index i = 0; i < panel.y.cols(); ++i) out << ',' << format_double(panel.y(t, i));
    out << '\n';
  }
}

void write_covariates_csv(std::ostream& out, const Eigen::MatrixXd& Z) {
  out << "unit";
  for (Eigen::Index k = 0; k < Z.cols(); ++k) out << ",z" << (k + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    out << "unit" << i;
    for (Eigen::Index k = 0; k < Z.cols(); ++k) out << ',' << format_double(Z(i, k));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

ScenarioConfig parse_scenario(std::istream& in) {
  ScenarioConfig s;
  bool have_kind = false;
  bool have_j = false;
  std::string line;
  int number = 0;
  auto fail = [&](const std::string& m) {
    throw Error(ErrorCode::InvalidScenario, "scenario line " + std::to_string(number) + ": " + m);
  };
  auto parse_int = [&](const std::string& v, auto& target) {
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), target);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) fail("bad integer '" + v + "'");
  };
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key=value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "kind") {
      s.kind = parse_scenario_kind(value);
      have_kind = true;
    } else if (key == "J") {
      parse_int(value, s.J);
      have_j = true;
    } else if (key == "t0_rule") {
      s.t0_rule = T0Rule::parse(value);
    } else if (key == "seed") {
      parse_int(value, s.seed);
    } else if (key == "replications") {
      parse_int(value, s.replications);
    } else if (key == "estimators") {
      s.estimators.clear();
      std::stringstream ss(value);
      std::string name;
      while (std::getline(ss, name, ',')) {
        if (!trim(name).empty()) s.estimators.push_back(parse_estimator_id(trim(name)));
      }
    } else if (key == "shock_sd") {
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s.shock_sd);
      if (ec != std::errc() || ptr != value.data() + value.size()) fail("bad number '" + value + "'");
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!have_kind) throw Error(ErrorCode::InvalidScenario, "scenario is missing 'kind'");
  if (!have_j) throw Error(ErrorCode::InvalidScenario, "scenario is missing 'J'");
  s.validate();
  return s;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario file " + path.string());
  return parse_scenario(in);
}

std::string scenario_to_text(const ScenarioConfig& s) {
  std::ostringstream out;
  out << "kind=" << to_string(s.kind) << '\n'
      << "J=" << s.J << '\n'
      << "t0_rule=" << s.t0_rule.to_string() << '\n'
      << "seed=" << s.seed << '\n'
      << "replications=" << s.replications << '\n'
      << "estimators=";
  for (std::size_t i = 0; i < s.estimators.size(); ++i) {
    out << (i ? "," : "") << to_string(s.estimators[i]);
  }
  out << '\n' << "shock_sd=" << format_double(s.shock_sd) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

Json solution_to_json(const WeightSolution& w, const Eigen::VectorXd& alpha_hat) {
  Json j;
  j["regime"] = std::string(to_string(w.regime));
  j["weights"] = vector_json(w.weights);
  j["intercept"] = w.intercept ? Json(*w.intercept) : Json(nullptr);
  j["pre_mse"] = w.pre_mse;
  j["l1"] = w.l1_norm;
  j["l2"] = w.l2_norm;
  j["alpha_hat"] = vector_json(alpha_hat);
  j["converged"] = w.report.converged;
  j["kkt_gap"] = w.report.kkt_gap;
  j["iterations"] = w.report.iterations;
  j["predictor_weights"] = optional_vector_json(w.predictor_weights);
  return j;
}

Json truth_to_json(const FactorModelTruth& truth) {
  const FactorModelConfig& cfg = truth.config;
  Json j;
  j["T0"] = cfg.T0;
  j["T1"] = cfg.T1;
  j["factors"] = cfg.factors;
  j["ar_coefficient"] = cfg.ar_coefficient;
  j["factor_variance"] = cfg.factor_variance;
  j["loadings"] = matrix_json(cfg.loadings);
  j["shock_sd"] = vector_json(cfg.shock_sd);
  j["treatment_effects"] = vector_json(cfg.treatment_effects);
  if (cfg.covariates) {
    j["covariates"] = {{"Z", matrix_json(cfg.covariates->Z)},
                       {"theta_sd", vector_json(cfg.covariates->theta_sd)}};
  } else {
    j["covariates"] = nullptr;
  }
  j["factor_paths"] = matrix_json(truth.factors);
  j["theta_paths"] = truth.theta ? matrix_json(*truth.theta) : Json(nullptr);
  j["shocks"] = matrix_json(truth.shocks);
  return j;
}

Json summary_to_json(const McSummary& summary) {
  const ScenarioConfig& s = summary.scenario;
  Json j;
  Json scen;
  scen["kind"] = std::string(to_string(s.kind));
  scen["J"] = s.J;
  scen["t0_rule"] = s.t0_rule.to_string();
  scen["T0"] = s.T0();
  scen["seed"] = s.seed;
  scen["replications"] = s.replications;
  Json ids = Json::array();
  for (EstimatorId id : s.estimators) ids.push_back(std::string(to_string(id)));
  scen["estimators"] = ids;
  scen["shock_sd"] = s.shock_sd;
  j["scenario"] = scen;

  Json per = Json::object();
  for (const auto& [id, e] : summary.per_estimator) {
    Json x;
    x["mean_mu"] = vector_json(e.mean_mu);
    x["sd_mu"] = vector_json(e.sd_mu);
    x["mean_z"] = optional_vector_json(e.mean_z);
    x["sd_z"] = optional_vector_json(e.sd_z);
    x["mean_alpha1"] = e.mean_alpha1;
    x["sd_alpha1"] = e.sd_alpha1;
    x["mean_pre_mse"] = e.mean_pre_mse;
    x["mean_l2"] = e.mean_l2;
    x["mean_mu_error_l2"] = e.mean_mu_error_l2;
    x["successes"] = e.successes;
    x["failures"] = e.failures;
    x["first_failure"] = e.first_failure;
    per[std::string(to_string(id))] = x;
  }
  j["per_estimator"] = per;
  return j;
}

McSummary summary_from_json(const Json& j) {
  try {
    McSummary out;
    const Json& scen = j.at("scenario");
    ScenarioConfig& s = out.scenario;
    s.kind = parse_scenario_kind(scen.at("kind").get<std::string>());
    s.J = scen.at("J").get<int>();
    s.t0_rule = T0Rule::parse(scen.at("t0_rule").get<std::string>());
    s.seed = scen.at("seed").get<std::uint64_t>();
    s.replications = scen.at("replications").get<int>();
    s.estimators.clear();
    for (const auto& name : scen.at("estimators")) s.estimators.push_back(parse_estimator_id(name.get<std::string>()));
    s.shock_sd = scen.at("shock_sd").get<double>();

    for (const auto& [name, x] : j.at("per_estimator").items()) {
      EstimatorSummary e;
      e.mean_mu = vector_from_json(x.at("mean_mu"));
      e.sd_mu = vector_from_json(x.at("sd_mu"));
      if (!x.at("mean_z").is_null()) e.mean_z = vector_from_json(x.at("mean_z"));
      if (!x.at("sd_z").is_null()) e.sd_z = vector_from_json(x.at("sd_z"));
      e.mean_alpha1 = x.at("mean_alpha1").get<double>();
      e.sd_alpha1 = x.at("sd_alpha1").get<double>();
      e.mean_pre_mse = x.at("mean_pre_mse").get<double>();
      e.mean_l2 = x.at("mean_l2").get<double>();
      e.mean_mu_error_l2 = x.at("mean_mu_error_l2").get<double>();
      e.successes = x.at("successes").get<int>();
      e.failures = x.at("failures").get<int>();
      e.first_failure = x.at("first_failure").get<std::string>();
      out.per_estimator.emplace(parse_estimator_id(name), std::move(e));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed summary JSON: ") + e.what());
  }
}

Json report_to_json(const ComparisonReport& report) {
  Json j;
  j["all_pass"] = report.all_pass;
  j["max_deviation"] = report.max_deviation;
  Json cells = Json::array();
  for (const CellComparison& c : report.cells) {
    Json x;
    x["panel"] = c.cell.panel;
    x["estimator"] = c.cell.estimator;
    x["J"] = c.cell.J;
    x["statistic"] = c.cell.statistic;
    x["reference"] = c.cell.value;
    x["tolerance"] = c.cell.tolerance;
    x["observed"] = c.observed;
    x["deviation"] = c.deviation;
    x["pass"] = c.pass;
    cells.push_back(x);
  }
  j["cells"] = cells;
  return j;
}

// ---------------------------------------------------------------------------

std::string digest_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    long long value = 0;
    const std::string_view text(epoch);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc() && ptr == text.data() + text.size()) now = static_cast<std::time_t>(value);
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["config_digest"] = m.config_digest;
  j["seed"] = m.seed;
  j["tool_version"] = m.tool_version;
  j["timestamp"] = m.timestamp;
  j["outputs"] = m.outputs;
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace syncon
