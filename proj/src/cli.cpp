#include "syncon/cli.hpp"

#include "syncon/error.hpp"
#include "syncon/io.hpp"
#include "syncon/reference.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace syncon {

namespace {

ScenarioConfig load_scenario_with_env(const fs::path& path) {
  ScenarioConfig s = load_scenario(path);
  if (const char* env = std::getenv("SYNCON_SEED")) {
    const std::string_view text(env);
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
      throw Error(ErrorCode::InvalidArgument, "SYNCON_SEED must be a non-negative integer");
    }
    s.seed = seed;
  }
  return s;
}

// Reads `t0=<n>` from the sidecar written next to simulated panels.
int read_sidecar_t0(const fs::path& panel) {
  fs::path meta = panel;
  meta.replace_extension(".meta");
  std::ifstream in(meta);
  if (!in) {
    throw Error(ErrorCode::InvalidArgument,
                "T0 unknown: pass --t0 or provide " + meta.string() + " containing t0=<n>");
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("t0=", 0) == 0) {
      int t0 = 0;
      const auto [ptr, ec] = std::from_chars(line.data() + 3, line.data() + line.size(), t0);
      if (ec == std::errc()) return t0;
    }
  }
  throw Error(ErrorCode::ParseError, meta.string() + " has no t0=<n> line");
}

void write_manifest(const fs::path& path, RunManifest m) {
  m.tool_version = kToolVersion;
  m.timestamp = utc_timestamp();
  write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic control weights, factor-model simulation and Monte Carlo checks",
               "syncon"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_path;
  int rep = 0;
  auto* simulate = app.add_subcommand("simulate", "Draw one replication of a scenario");
  simulate->add_option("--scenario", scenario_path, "Scenario config file")->required();
  simulate->add_option("--rep", rep, "Replication index")->required()->check(CLI::NonNegativeNumber);
  simulate->add_option("--out", out_path, "Output directory")->required();

  std::string panel_path;
  std::string covariates_path;
  std::string estimator_name;
  double tol = kDefaultSimplexTol;
  int t0 = 0;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate weights on a wide panel CSV");
  fit_cmd->add_option("--panel", panel_path, "Wide panel CSV")->required();
  fit_cmd->add_option("--covariates", covariates_path, "Covariate CSV");
  fit_cmd->add_option("--estimator", estimator_name, "Estimator id")->required();
  fit_cmd->add_option("--tol", tol, "Simplex solver tolerance")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--t0", t0, "Number of pre-treatment rows (else read from <panel>.meta)");
  fit_cmd->add_option("--out", out_path, "Output JSON")->required();

  int parallelism = 1;
  int replications = 0;
  std::string reference_path;
  auto* mc = app.add_subcommand("mc", "Run a Monte Carlo scenario");
  mc->add_option("--scenario", scenario_path, "Scenario config file")->required();
  mc->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);
  mc->add_option("--replications", replications, "Override the scenario's replication count")
      ->check(CLI::PositiveNumber);
  mc->add_option("--reference", reference_path, "Reference table to compare against");
  mc->add_option("--out", out_path, "Output directory")->required();

  std::vector<std::string> summary_paths;
  auto* report = app.add_subcommand("report", "Compare Monte Carlo summaries with a reference table");
  report->add_option("--summary", summary_paths, "Summary JSON (repeatable)")->required();
  report->add_option("--reference", reference_path, "Reference table")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      const ScenarioConfig s = load_scenario_with_env(scenario_path);
      const SimulatedPanel sim = make_scenario_panel(s, rep);
      const fs::path dir(out_path);
      fs::create_directories(dir);

      std::vector<std::string> outputs;
      std::ostringstream csv;
      write_panel_csv(csv, sim.panel);
      write_text_file(dir / "panel.csv", csv.str());
      outputs.push_back("panel.csv");
      write_text_file(dir / "panel.meta",
                      "t0=" + std::to_string(sim.panel.T0) + "\nt1=" + std::to_string(sim.panel.T1) + "\n");
      outputs.push_back("panel.meta");
      if (sim.panel.covariates) {
        std::ostringstream cov;
        write_covariates_csv(cov, *sim.panel.covariates);
        write_text_file(dir / "covariates.csv", cov.str());
        outputs.push_back("covariates.csv");
      }
      write_text_file(dir / "truth.json", dump(truth_to_json(sim.truth)));
      outputs.push_back("truth.json");

      RunManifest m;
      m.command = "simulate --rep " + std::to_string(rep);
      m.config_digest = digest_hex(scenario_to_text(s));
      m.seed = s.seed;
      m.outputs = outputs;
      write_manifest(dir / "manifest.json", m);
      return 0;
    }

    if (*fit_cmd) {
      const EstimatorId id = parse_estimator_id(estimator_name);
      PanelCsvOptions opts;
      opts.T0 = fit_cmd->count("--t0") ? t0 : read_sidecar_t0(panel_path);
      if (!covariates_path.empty()) opts.covariates = covariates_path;
      const PanelData panel = parse_panel_csv(panel_path, opts);
      FitOptions fit_opts;
      fit_opts.tol = tol;
      const WeightSolution w = fit(id, panel, fit_opts);
      const Eigen::VectorXd alpha = treatment_effects(panel, w);

      const fs::path target(out_path);
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      write_text_file(target, dump(solution_to_json(w, alpha)));

      RunManifest m;
      m.command = "fit --estimator " + estimator_name;
      m.config_digest = digest_hex("estimator=" + estimator_name + "\nt0=" + std::to_string(opts.T0) +
                                   "\ntol=" + format_double(tol) + "\n" + read_text_file(panel_path));
      m.outputs = {target.filename().string()};
      fs::path manifest = target;
      manifest.replace_extension(".manifest.json");
      write_manifest(manifest, m);
      return 0;
    }

    if (*mc) {
      ScenarioConfig s = load_scenario_with_env(scenario_path);
      if (replications > 0) s.replications = replications;
      const McSummary summary = run_mc(s, parallelism);
      const fs::path dir(out_path);
      fs::create_directories(dir);
      std::vector<std::string> outputs;
      write_text_file(dir / "summary.json", dump(summary_to_json(summary)));
      outputs.push_back("summary.json");

      bool pass = true;
      if (!reference_path.empty()) {
        const ComparisonReport cmp = compare_to_reference(summary, load_reference(reference_path));
        write_text_file(dir / "comparison.json", dump(report_to_json(cmp)));
        const std::string table = format_report(cmp);
        write_text_file(dir / "comparison.txt", table);
        outputs.push_back("comparison.json");
        outputs.push_back("comparison.txt");
        out << table;
        pass = cmp.all_pass;
      }

      RunManifest m;
      m.command = "mc";
      m.config_digest = digest_hex(scenario_to_text(s));
      m.seed = s.seed;
      m.outputs = outputs;
      write_manifest(dir / "manifest.json", m);
      if (!pass) {
        err << "comparison against " << reference_path << " has cells outside tolerance\n";
        return 1;
      }
      return 0;
    }

    if (*report) {
      std::vector<McSummary> summaries;
      for (const auto& path : summary_paths) {
        try {
          summaries.push_back(summary_from_json(Json::parse(read_text_file(path))));
        } catch (const nlohmann::json::parse_error& e) {
          throw Error(ErrorCode::ParseError, path + ": " + e.what());
        }
      }
      const ComparisonReport cmp = compare_to_reference(summaries, load_reference(reference_path));
      out << format_report(cmp);
      return cmp.all_pass ? 0 : 1;
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace syncon
