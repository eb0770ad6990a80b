#pragma once

// Panel simulation from a linear factor model
//
//   y_it = lambda_t' mu_i + theta_t' z_i + eps_it     (untreated)
//   y_0t = alpha_t + (untreated outcome)              (treated unit, t > T0)
//
// plus the fixed Monte Carlo designs the project reproduces.

#include "syncon/estimator_id.hpp"
#include "syncon/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace syncon {

/// Observed outcomes. Column 0 is the treated unit; rows are periods, the
/// first T0 of them pre-treatment.
struct PanelData {
  Eigen::MatrixXd y;
  int T0 = 0;
  int T1 = 0;
  std::optional<Eigen::MatrixXd> covariates;  // (J+1) x q, row 0 = treated

  int controls() const { return static_cast<int>(y.cols()) - 1; }

  Eigen::VectorXd treated_pre() const { return y.col(0).head(T0); }
  Eigen::MatrixXd controls_pre() const { return y.block(0, 1, T0, controls()); }
  Eigen::VectorXd treated_post() const { return y.col(0).tail(T1); }
  Eigen::MatrixXd controls_post() const { return y.block(T0, 1, T1, controls()); }

  /// Throws DimensionMismatch / NonFinite when the invariants do not hold.
  void validate() const;
};

struct CovariateSpec {
  Eigen::MatrixXd Z;         // (J+1) x q
  Eigen::VectorXd theta_sd;  // length q; theta_qt iid N(0, theta_sd^2)
};

struct FactorModelConfig {
  int factors = 1;
  double ar_coefficient = 0.0;
  double factor_variance = 1.0;
  Eigen::MatrixXd loadings;  // (J+1) x F, row 0 = treated unit
  Eigen::VectorXd shock_sd;  // length J+1
  std::optional<CovariateSpec> covariates;
  Eigen::VectorXd treatment_effects;  // length T1
  int T0 = 0;
  int T1 = 0;

  int controls() const { return static_cast<int>(loadings.rows()) - 1; }
  void validate() const;
};

struct FactorModelTruth {
  Eigen::MatrixXd factors;               // (T0+T1) x F
  std::optional<Eigen::MatrixXd> theta;  // (T0+T1) x q
  Eigen::MatrixXd shocks;                // (T0+T1) x (J+1)
  FactorModelConfig config;
};

struct SimulatedPanel {
  PanelData panel;
  FactorModelTruth truth;
};

/// Independent AR(1) columns started from the stationary law N(0, variance),
/// innovation variance variance * (1 - ar^2).
Eigen::MatrixXd simulate_ar1_factors(int factors, double ar, double variance, int length,
                                     CounterRng& rng);

/// Draws factors, covariate effects and shocks on separate streams of `key`.
SimulatedPanel simulate_panel(const FactorModelConfig& cfg, StreamKey key);

// ---------------------------------------------------------------------------
// Monte Carlo designs

enum class ScenarioKind { TwoFactorGroups, TwoFactorCovariates, SimpleExampleF1 };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view name);

struct T0Rule {
  enum class Kind { JPlus5, TwoTimesJ, Explicit };
  Kind kind = Kind::TwoTimesJ;
  int explicit_t0 = 0;

  int resolve(int J) const;
  /// "j_plus_5", "two_times_j" or the explicit integer.
  std::string to_string() const;
  static T0Rule parse(std::string_view text);
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::TwoFactorGroups;
  int J = 10;
  T0Rule t0_rule;
  std::uint64_t seed = 0;
  int replications = 1000;
  std::vector<EstimatorId> estimators = {EstimatorId::Sc};
  double shock_sd = 1.0;  // idiosyncratic shock sd (all units)

  int T0() const { return t0_rule.resolve(J); }
  /// Throws InvalidScenario.
  void validate() const;
  /// The factor-model configuration this scenario simulates.
  FactorModelConfig model() const;
};

/// Panel for replication `rep` of scenario `s`, keyed by (s.seed, rep).
SimulatedPanel make_scenario_panel(const ScenarioConfig& s, int rep);

}  // namespace syncon
