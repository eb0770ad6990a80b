#include "syncon/dgp.hpp"

#include "syncon/error.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace syncon {

namespace {

enum Stream : std::uint64_t { kFactorStream = 0, kThetaStream = 1, kShockStream = 2 };

void check(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) throw Error(code, message);
}

}  // namespace

void PanelData::validate() const {
  check(y.cols() >= 2, ErrorCode::DimensionMismatch, "panel needs a treated unit and >= 1 control");
  check(T0 >= 1 && T1 >= 0 && y.rows() == T0 + T1, ErrorCode::DimensionMismatch,
        "panel row count must equal T0 + T1");
  check(y.allFinite(), ErrorCode::NonFinite, "panel outcomes contain NaN or Inf");
  if (covariates) {
    check(covariates->rows() == y.cols() && covariates->cols() >= 1,
          ErrorCode::DimensionMismatch, "covariate matrix must have one row per unit");
    check(covariates->allFinite(), ErrorCode::NonFinite, "covariates contain NaN or Inf");
  }
}

void FactorModelConfig::validate() const {
  const Eigen::Index units = loadings.rows();
  check(factors >= 1 && loadings.cols() == factors, ErrorCode::DimensionMismatch,
        "loadings must have F columns");
  check(units >= 2, ErrorCode::DimensionMismatch, "loadings need a treated row and >= 1 control");
  check(std::abs(ar_coefficient) < 1.0, ErrorCode::InvalidArgument, "|ar_coefficient| must be < 1");
  check(factor_variance > 0.0, ErrorCode::InvalidArgument, "factor_variance must be positive");
  check(loadings.allFinite(), ErrorCode::NonFinite, "loadings contain NaN or Inf");
  check(shock_sd.size() == units, ErrorCode::DimensionMismatch, "shock_sd needs one entry per unit");
  check(shock_sd.allFinite() && (shock_sd.array() >= 0.0).all(), ErrorCode::InvalidArgument,
        "shock_sd must be finite and non-negative");
  check(T0 >= 1 && T1 >= 0, ErrorCode::InvalidArgument, "T0 >= 1 and T1 >= 0 required");
  check(treatment_effects.size() == T1, ErrorCode::DimensionMismatch,
        "treatment_effects needs T1 entries");
  if (covariates) {
    check(covariates->Z.rows() == units && covariates->Z.cols() >= 1, ErrorCode::DimensionMismatch,
          "covariate matrix must be (J+1) x q with q >= 1");
    check(covariates->theta_sd.size() == covariates->Z.cols(), ErrorCode::DimensionMismatch,
          "theta_sd needs one entry per covariate");
    check(covariates->Z.allFinite() && covariates->theta_sd.allFinite(), ErrorCode::NonFinite,
          "covariate specification contains NaN or Inf");
  }
}

Eigen::MatrixXd simulate_ar1_factors(int factors, double ar, double variance, int length,
                                     CounterRng& rng) {
  check(std::abs(ar) < 1.0, ErrorCode::InvalidArgument, "|ar| must be < 1");
  check(variance > 0.0, ErrorCode::InvalidArgument, "variance must be positive");
  check(factors >= 1 && length >= 1, ErrorCode::InvalidArgument, "need factors >= 1, length >= 1");
  const double sd = std::sqrt(variance);
  const double innovation_sd = std::sqrt(variance * (1.0 - ar * ar));
  Eigen::MatrixXd out(length, factors);
  for (int f = 0; f < factors; ++f) {
    out(0, f) = sd * rng.normal();
    for (int t = 1; t < length; ++t) out(t, f) = ar * out(t - 1, f) + innovation_sd * rng.normal();
  }
  return out;
}

SimulatedPanel simulate_panel(const FactorModelConfig& cfg, StreamKey key) {
  cfg.validate();
  const int periods = cfg.T0 + cfg.T1;
  const auto units = cfg.loadings.rows();

  SimulatedPanel out;
  FactorModelTruth& truth = out.truth;
  truth.config = cfg;

  CounterRng factor_rng(key, kFactorStream);
  truth.factors =
      simulate_ar1_factors(cfg.factors, cfg.ar_coefficient, cfg.factor_variance, periods, factor_rng);

  Eigen::MatrixXd y = truth.factors * cfg.loadings.transpose();
  if (cfg.covariates) {
    CounterRng theta_rng(key, kThetaStream);
    const auto q = cfg.covariates->Z.cols();
    Eigen::MatrixXd theta(periods, q);
    for (Eigen::Index k = 0; k < q; ++k) {
      for (int t = 0; t < periods; ++t) theta(t, k) = cfg.covariates->theta_sd[k] * theta_rng.normal();
    }
    y += theta * cfg.covariates->Z.transpose();
    truth.theta = std::move(theta);
  }

  CounterRng shock_rng(key, kShockStream);
  truth.shocks.resize(periods, units);
  for (Eigen::Index i = 0; i < units; ++i) {
    for (int t = 0; t < periods; ++t) truth.shocks(t, i) = cfg.shock_sd[i] * shock_rng.normal();
  }
  y += truth.shocks;
  y.col(0).tail(cfg.T1) += cfg.treatment_effects;

  out.panel.y = std::move(y);
  out.panel.T0 = cfg.T0;
  out.panel.T1 = cfg.T1;
  if (cfg.covariates) out.panel.covariates = cfg.covariates->Z;
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::TwoFactorGroups: return "two_factor_groups";
    case ScenarioKind::TwoFactorCovariates: return "two_factor_covariates";
    case ScenarioKind::SimpleExampleF1: return "simple_example_f1";
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  for (auto kind : {ScenarioKind::TwoFactorGroups, ScenarioKind::TwoFactorCovariates,
                    ScenarioKind::SimpleExampleF1}) {
    if (name == to_string(kind)) return kind;
  }
  throw Error(ErrorCode::InvalidScenario, "unknown scenario kind '" + std::string(name) + "'");
}

int T0Rule::resolve(int J) const {
  switch (kind) {
    case Kind::JPlus5: return J + 5;
    case Kind::TwoTimesJ: return 2 * J;
    case Kind::Explicit: return explicit_t0;
  }
  return 0;
}

std::string T0Rule::to_string() const {
  switch (kind) {
    case Kind::JPlus5: return "j_plus_5";
    case Kind::TwoTimesJ: return "two_times_j";
    case Kind::Explicit: return std::to_string(explicit_t0);
  }
  return "";
}

T0Rule T0Rule::parse(std::string_view text) {
  if (text == "j_plus_5") return {Kind::JPlus5, 0};
  if (text == "two_times_j") return {Kind::TwoTimesJ, 0};
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 1) {
    throw Error(ErrorCode::InvalidScenario, "t0_rule must be j_plus_5, two_times_j or a positive integer");
  }
  return {Kind::Explicit, value};
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidScenario, m); };
  if (J < 1) fail("J must be >= 1");
  if (kind == ScenarioKind::TwoFactorGroups && J % 2 != 0) fail("two_factor_groups needs an even J");
  if (kind == ScenarioKind::TwoFactorCovariates && J % 4 != 0) {
    fail("two_factor_covariates needs J divisible by 4");
  }
  if (T0() < 2) fail("T0 must be >= 2");
  if (replications < 1) fail("replications must be >= 1");
  if (estimators.empty()) fail("at least one estimator is required");
  if (!(shock_sd >= 0.0) || !std::isfinite(shock_sd)) fail("shock_sd must be finite and non-negative");
}

FactorModelConfig ScenarioConfig::model() const {
  validate();
  FactorModelConfig cfg;
  cfg.T0 = T0();
  cfg.T1 = 1;
  cfg.treatment_effects = Eigen::VectorXd::Zero(1);
  cfg.shock_sd = Eigen::VectorXd::Constant(J + 1, shock_sd);

  switch (kind) {
    case ScenarioKind::TwoFactorGroups: {
      cfg.factors = 2;
      cfg.ar_coefficient = 0.5;
      cfg.factor_variance = 1.0;
      cfg.loadings = Eigen::MatrixXd::Zero(J + 1, 2);
      cfg.loadings(0, 0) = 1.0;
      for (int j = 1; j <= J; ++j) cfg.loadings(j, j <= J / 2 ? 0 : 1) = 1.0;
      break;
    }
    case ScenarioKind::TwoFactorCovariates: {
      cfg.factors = 2;
      cfg.ar_coefficient = 0.5;
      cfg.factor_variance = 1.0;
      cfg.loadings = Eigen::MatrixXd::Zero(J + 1, 2);
      CovariateSpec cov;
      cov.Z = Eigen::MatrixXd::Zero(J + 1, 2);
      cov.theta_sd = Eigen::VectorXd::Ones(2);
      cfg.loadings(0, 0) = 1.0;
      cov.Z(0, 0) = 1.0;
      // Four equal groups: (mu, z) in {(1,0),(0,1)} x {(1,0),(0,1)}.
      const int group = J / 4;
      for (int j = 1; j <= J; ++j) {
        const int g = (j - 1) / group;
        cfg.loadings(j, g < 2 ? 0 : 1) = 1.0;
        cov.Z(j, g % 2 == 0 ? 0 : 1) = 1.0;
      }
      cfg.covariates = std::move(cov);
      break;
    }
    case ScenarioKind::SimpleExampleF1: {
      cfg.factors = 1;
      cfg.ar_coefficient = 0.0;
      cfg.factor_variance = 1.0;
      cfg.loadings = Eigen::MatrixXd::Ones(J + 1, 1);
      break;
    }
  }
  return cfg;
}

SimulatedPanel make_scenario_panel(const ScenarioConfig& s, int rep) {
  if (rep < 0) throw Error(ErrorCode::InvalidScenario, "replication index must be non-negative");
  return simulate_panel(s.model(), StreamKey{s.seed, static_cast<std::uint64_t>(rep)});
}

}  // namespace syncon
