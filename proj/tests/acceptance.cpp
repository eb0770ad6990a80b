// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Scenario files come from data/scenarios so the shipped
// configurations are exactly what is checked.

#include "support.hpp"
#include "syncon/cli.hpp"
#include "syncon/diagnostics.hpp"
#include "syncon/io.hpp"
#include "syncon/montecarlo.hpp"
#include "syncon/reference.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace syncon;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(SYNCON_SOURCE_DIR) / "data" / "scenarios";

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> misses;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      misses.push_back(what);
    }
  }
};

int failures = 0;

void report(int id, const std::string& title, Verdict& v, double seconds) {
  std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << title << "  ["
            << v.detail.str();
  for (const auto& m : v.misses) std::cout << "; miss: " << m;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", seconds);
  std::cout << "; " << buf << "]" << std::endl;
  if (!v.pass) ++failures;
}

template <class F>
void criterion(int id, const std::string& title, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.misses.push_back(std::string("exception: ") + e.what());
  }
  report(id, title, v, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

McSummary run_config(const std::string& name, std::optional<int> reps = std::nullopt,
                     std::optional<std::vector<EstimatorId>> ids = std::nullopt) {
  ScenarioConfig s = load_scenario(kScenarios / (name + ".cfg"));
  if (reps) s.replications = *reps;
  if (ids) s.estimators = *ids;
  return run_mc(s, workers());
}

// Absolute check on a mean, relative check on a spread.
void check_abs(Verdict& v, const std::string& label, double observed, double target, double tol) {
  v.expect(std::abs(observed - target) <= tol,
           label + " " + fmt(observed) + " vs " + fmt(target) + " +/- " + fmt(tol));
}
void check_rel(Verdict& v, const std::string& label, double observed, double target, double rel) {
  v.expect(std::abs(observed / target - 1.0) <= rel,
           label + " " + fmt(observed) + " vs " + fmt(target) + " within " + fmt(100 * rel) + "%");
}

// Published Table 1 values: {E mu1, se mu1, E mu2, se mu2, se alpha}.
struct Table1Cell {
  double mu1, sd1, mu2, sd2, sd_alpha;
};
const std::map<std::pair<char, int>, Table1Cell> kTable1Sc = {
    {{'A', 4}, {0.760, 0.206, 0.240, 0.206, 1.288}},   {{'A', 10}, {0.817, 0.156, 0.183, 0.156, 1.194}},
    {{'A', 50}, {0.905, 0.076, 0.095, 0.076, 1.084}},  {{'A', 100}, {0.929, 0.054, 0.071, 0.054, 1.073}},
    {{'B', 4}, {0.753, 0.217, 0.247, 0.217, 1.297}},   {{'B', 10}, {0.831, 0.136, 0.169, 0.136, 1.186}},
    {{'B', 50}, {0.922, 0.057, 0.078, 0.057, 1.050}},  {{'B', 100}, {0.944, 0.040, 0.056, 0.040, 1.047}},
};

std::map<std::pair<char, int>, McSummary> table1_runs;

const McSummary& table1(char panel, int J) {
  auto key = std::make_pair(panel, J);
  auto it = table1_runs.find(key);
  if (it == table1_runs.end()) {
    it = table1_runs
             .emplace(key, run_config("table1_panel" + std::string(1, panel) + "_J" + std::to_string(J), 1000))
             .first;
  }
  return it->second;
}

// Panels generated by the property runs, kept for the identity checks.
std::vector<ScenarioConfig> property_scenarios;

}  // namespace

int main() {
  std::cout << "acceptance run with " << workers() << " worker thread(s)" << std::endl;

  criterion(1, "Table 1 SC columns, 1000 replications", [](Verdict& v) {
    int cells = 0;
    for (const auto& [key, ref] : kTable1Sc) {
      const auto& s = table1(key.first, key.second).per_estimator.at(EstimatorId::Sc);
      const std::string tag = std::string(1, key.first) + std::to_string(key.second) + " ";
      check_abs(v, tag + "E[mu1]", s.mean_mu[0], ref.mu1, 0.02);
      check_abs(v, tag + "E[mu2]", s.mean_mu[1], ref.mu2, 0.015);
      check_rel(v, tag + "se[mu1]", s.sd_mu[0], ref.sd1, 0.08);
      check_rel(v, tag + "se[mu2]", s.sd_mu[1], ref.sd2, 0.08);
      check_rel(v, tag + "se(alpha)", s.sd_alpha1, ref.sd_alpha, 0.08);
      cells += 5;
    }
    v.detail << (cells - static_cast<int>(v.misses.size())) << "/" << cells << " cells in tolerance";
  });

  criterion(2, "Table 1 OLS and adding-up columns at J=100, 1000 replications", [](Verdict& v) {
    const auto& a = table1('A', 100).per_estimator.at(EstimatorId::Ols);
    const auto& b = table1('B', 100).per_estimator.at(EstimatorId::Ols);
    const auto& c = table1('B', 100).per_estimator.at(EstimatorId::OlsAddUp);
    check_abs(v, "A ols E[mu1]", a.mean_mu[0], 0.976, 0.02);
    check_rel(v, "A ols se(alpha)", a.sd_alpha1, 5.220, 0.10);
    check_abs(v, "B ols E[mu1]", b.mean_mu[0], 0.982, 0.02);
    check_rel(v, "B ols se(alpha)", b.sd_alpha1, 1.444, 0.10);
    check_abs(v, "B ols_addup E[mu1]", c.mean_mu[0], 0.991, 0.02);
    check_rel(v, "B ols_addup se(alpha)", c.sd_alpha1, 1.437, 0.10);
    v.detail << "A ols " << fmt(a.mean_mu[0]) << "/" << fmt(a.sd_alpha1) << ", B ols " << fmt(b.mean_mu[0])
             << "/" << fmt(b.sd_alpha1) << ", B ols_addup " << fmt(c.mean_mu[0]) << "/" << fmt(c.sd_alpha1);
  });

  criterion(3, "Table A.1 panel B J=100, 500 replications", [](Verdict& v) {
    const McSummary m = run_config("tableA1_panelB_J100");
    const auto& all = m.per_estimator.at(EstimatorId::Sc);
    const auto& half = m.per_estimator.at(EstimatorId::ScNestedHalfLags);
    const auto& mean = m.per_estimator.at(EstimatorId::ScNestedMean);
    check_abs(v, "all lags mu1", all.mean_mu[0], 0.938, 0.04);
    check_abs(v, "all lags z1", (*all.mean_z)[0], 0.938, 0.04);
    check_abs(v, "half lags mu1", half.mean_mu[0], 0.942, 0.04);
    check_abs(v, "half lags z1", (*half.mean_z)[0], 0.941, 0.04);
    check_abs(v, "mean mu1", mean.mean_mu[0], 0.666, 0.06);
    check_abs(v, "mean z1", (*mean.mean_z)[0], 0.995, 0.03);
    v.detail << "all " << fmt(all.mean_mu[0]) << "/" << fmt((*all.mean_z)[0]) << ", half "
             << fmt(half.mean_mu[0]) << "/" << fmt((*half.mean_z)[0]) << ", mean " << fmt(mean.mean_mu[0])
             << "/" << fmt((*mean.mean_z)[0]);
  });

  criterion(4, "variance law sigma^2/(1-c), 2000 replications", [](Verdict& v) {
    const auto half = simple_example_variance(0.5, 100, 1.0, 2000, 20240304, workers());
    const auto high = simple_example_variance(0.8, 80, 1.0, 2000, 20240305, workers());
    check_rel(v, "c=0.5 sd", half.sd_alpha, 1.0 / std::sqrt(0.5), 0.05);
    check_rel(v, "c=0.8 sd", high.sd_alpha, 1.0 / std::sqrt(0.2), 0.07);
    v.detail << "c=0.5 " << fmt(half.sd_alpha) << " vs " << fmt(half.predicted) << ", c=0.8 "
             << fmt(high.sd_alpha) << " vs " << fmt(high.predicted);
  });

  criterion(5, "SC consistency properties at T0=2J, 500 replications", [](Verdict& v) {
    std::vector<EstimatorSummary> runs;
    for (int J : {10, 50, 100}) {
      ScenarioConfig s = load_scenario(kScenarios / ("table1_panelB_J" + std::to_string(J) + ".cfg"));
      s.replications = 500;
      s.estimators = {EstimatorId::Sc};
      property_scenarios.push_back(s);
      runs.push_back(run_mc(s, workers()).per_estimator.at(EstimatorId::Sc));
    }
    v.expect(runs[0].mean_mu_error_l2 > runs[1].mean_mu_error_l2 &&
                 runs[1].mean_mu_error_l2 > runs[2].mean_mu_error_l2,
             "(i) loading error not decreasing");
    v.expect(runs[2].mean_pre_mse > 0.9 && runs[2].mean_pre_mse < 1.2,
             "(ii) pre_mse " + fmt(runs[2].mean_pre_mse) + " outside (0.9, 1.2)");
    v.expect(runs[0].mean_l2 > runs[1].mean_l2 && runs[1].mean_l2 > runs[2].mean_l2,
             "(iii) weight norm not decreasing");
    v.detail << "|mu err| " << fmt(runs[0].mean_mu_error_l2) << " > " << fmt(runs[1].mean_mu_error_l2) << " > "
             << fmt(runs[2].mean_mu_error_l2) << ", pre_mse(J=100) " << fmt(runs[2].mean_pre_mse)
             << ", |w| " << fmt(runs[0].mean_l2) << " > " << fmt(runs[1].mean_l2) << " > " << fmt(runs[2].mean_l2);
  });

  criterion(6, "solver oracles on 50 small instances", [](Verdict& v) {
    std::mt19937_64 gen(60606);
    double worst_grid = -1e300;
    double worst_ols = 0.0;
    for (int i = 0; i < 50; ++i) {
      const Eigen::Index J = 1 + i % 4;
      const Eigen::Index T = std::min<Eigen::Index>(8, J + 1 + (i / 4) % 5);
      LsProblem p = syncon::test::random_problem(gen, T, J);
      const SolveReport sx = solve_simplex_qp(p);
      const auto oracle = syncon::test::grid_oracle(p);
      worst_grid = std::max(worst_grid, sx.objective - oracle.objective);
      v.expect(sx.objective <= oracle.objective + 1e-6, "simplex above grid oracle on instance " + std::to_string(i));

      p.regime = Regime::AddingUp;
      const SolveReport au = solve_adding_up_ls(p);
      p.regime = Regime::Unrestricted;
      const SolveReport ols = solve_ols(p);
      const Eigen::VectorXd ref = syncon::test::long_double_ols(p.Y, p.y0);
      const double rel = (ols.weights - ref).norm() / ref.norm();
      worst_ols = std::max(worst_ols, rel);
      v.expect(rel <= 1e-9, "OLS off the extended-precision oracle on instance " + std::to_string(i));
      v.expect(ols.objective <= au.objective + 1e-14 && au.objective <= sx.objective + 1e-14,
               "relaxation ordering broken on instance " + std::to_string(i));
    }
    v.detail << "max(simplex - grid) " << worst_grid << ", max OLS relative error " << worst_ols;
  });

  criterion(7, "determinism through the CLI and across worker counts", [](Verdict& v) {
    const fs::path tmp = fs::temp_directory_path() / ("syncon_acceptance_" + std::to_string(std::random_device{}()));
    fs::create_directories(tmp);
    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    std::ostringstream sink;
    auto cli = [&](std::vector<std::string> args) {
      args.insert(args.begin(), "syncon");
      return cli_main(args, sink, sink);
    };
    const std::string cfg = (kScenarios / "tableA1_panelA_J12.cfg").string();
    int files = 0;
    for (const char* cmd : {"simulate", "mc"}) {
      for (const char* dir : {"one", "two"}) {
        const fs::path out = tmp / cmd / dir;
        const int code = std::string(cmd) == "simulate"
                             ? cli({"simulate", "--scenario", cfg, "--rep", "3", "--out", out.string()})
                             : cli({"mc", "--scenario", cfg, "--replications", "10", "--out", out.string()});
        v.expect(code == 0, std::string(cmd) + " exited with " + std::to_string(code));
      }
      for (const auto& entry : fs::directory_iterator(tmp / cmd / "one")) {
        const fs::path twin = tmp / cmd / "two" / entry.path().filename();
        v.expect(fs::exists(twin) && read_text_file(entry.path()) == read_text_file(twin),
                 std::string(cmd) + " output differs: " + entry.path().filename().string());
        ++files;
      }
    }
    unsetenv("SOURCE_DATE_EPOCH");
    fs::remove_all(tmp);

    ScenarioConfig s = load_scenario(kScenarios / "table1_panelA_J50.cfg");
    s.replications = 64;
    s.estimators = {EstimatorId::Sc, EstimatorId::ScDemeaned, EstimatorId::Ols, EstimatorId::OlsAddUp};
    const std::string serial = summary_to_json(run_mc(s, 1)).dump();
    const std::string parallel = summary_to_json(run_mc(s, 8)).dump();
    v.expect(serial == parallel, "run_mc summaries differ between 1 and 8 workers");
    v.detail << files << " CLI output files byte-identical, run_mc 1 vs 8 workers identical";
  });

  criterion(8, "exact identities", [](Verdict& v) {
    if (property_scenarios.empty()) {
      for (int J : {10, 50, 100}) {
        ScenarioConfig s = load_scenario(kScenarios / ("table1_panelB_J" + std::to_string(J) + ".cfg"));
        s.replications = 500;
        property_scenarios.push_back(s);
      }
    }
    ScenarioConfig cov = load_scenario(kScenarios / "tableA1_panelB_J40.cfg");
    cov.replications = 100;
    property_scenarios.push_back(cov);

    double worst_recon = 0.0;
    double worst_decomp = 0.0;
    int panels = 0;
    for (const ScenarioConfig& s : property_scenarios) {
      for (int rep = 0; rep < s.replications; ++rep) {
        const SimulatedPanel sim = make_scenario_panel(s, rep);
        const auto& t = sim.truth;
        Eigen::MatrixXd rest = sim.panel.y - t.factors * t.config.loadings.transpose() - t.shocks;
        if (t.theta) rest -= *t.theta * t.config.covariates->Z.transpose();
        rest.col(0).tail(t.config.T1) -= t.config.treatment_effects;
        worst_recon = std::max(worst_recon, rest.lpNorm<Eigen::Infinity>());

        for (EstimatorId id : {EstimatorId::Sc, EstimatorId::ScDemeaned}) {
          const WeightSolution w = fit(id, sim.panel);
          const Eigen::VectorXd alpha = treatment_effects(sim.panel, w);
          for (int p = 0; p < t.config.T1; ++p) {
            const double err = alpha[p] - t.config.treatment_effects[p];
            worst_decomp = std::max(worst_decomp, std::abs(error_decomposition(w, t, p).total() - err));
          }
        }
        ++panels;
      }
    }
    v.expect(worst_recon <= 1e-10, "reconstruction residual " + std::to_string(worst_recon));
    v.expect(worst_decomp <= 1e-10, "decomposition residual " + std::to_string(worst_decomp));

    // Constant shifts of the treated unit on a dyadic grid, where y + c is exact.
    std::mt19937_64 gen(888);
    int shifts = 0;
    for (int i = 0; i < 40; ++i) {
      Eigen::MatrixXd y = syncon::test::random_matrix(gen, 30, 11);
      y = (y.array() * 65536.0).round() / 65536.0;
      const PanelData base = syncon::test::make_panel(y, 25);
      const WeightSolution w0 = fit_demeaned_sc(base);
      for (double c : {7.0, -3.0, 1024.0}) {
        PanelData shifted = base;
        shifted.y.col(0).array() += c;
        const WeightSolution w1 = fit_demeaned_sc(shifted);
        v.expect(w1.weights == w0.weights && w1.pre_mse == w0.pre_mse,
                 "demeaned weights moved under shift " + std::to_string(c));
        ++shifts;
      }
    }
    v.detail << panels << " panels: max reconstruction residual " << worst_recon << ", max decomposition residual "
             << worst_decomp << "; " << shifts << " shifted panels bit-identical";
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion/criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
