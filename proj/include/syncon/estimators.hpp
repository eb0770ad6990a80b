#pragma once

// Weight estimators mapping a panel to control-unit weights and the implied
// post-treatment effects.

#include "syncon/dgp.hpp"
#include "syncon/estimator_id.hpp"
#include "syncon/solver.hpp"

#include <Eigen/Dense>

#include <optional>

namespace syncon {

struct WeightSolution {
  Eigen::VectorXd weights;
  std::optional<double> intercept;  // demeaned SC only
  EstimatorId regime = EstimatorId::Sc;
  double pre_mse = 0.0;
  double l1_norm = 0.0;
  double l2_norm = 0.0;
  SolveReport report;
  std::optional<Eigen::VectorXd> predictor_weights;  // diag(V), nested SC only
};

struct FitOptions {
  double tol = kDefaultSimplexTol;
  std::size_t max_iter = kDefaultSimplexMaxIter;
};

WeightSolution fit_sc(const PanelData& panel, const FitOptions& opts = {});

/// SC on pre-period-demeaned outcomes; equivalent to adding an intercept.
WeightSolution fit_demeaned_sc(const PanelData& panel, const FitOptions& opts = {});

enum class OlsConstraint { Unrestricted, AddingUp };

WeightSolution fit_ols(const PanelData& panel, OlsConstraint constraint);

enum class LagSelector { AllLags, FirstHalfLags, MeanOfLags };

struct PredictorSpec {
  LagSelector lag_selector = LagSelector::AllLags;
  bool include_covariates = false;
  /// Fixed diag(V). When absent, fit_sc_nested searches over V.
  std::optional<Eigen::VectorXd> v_weights;
};

struct Predictors {
  Eigen::VectorXd x0;  // R
  Eigen::MatrixXd X1;  // R x J
};

/// Lag rows first (all T0 lags, the earliest ceil(T0/2), or the single
/// pre-period mean), then one row per covariate.
Predictors build_predictors(const PanelData& panel, const PredictorSpec& spec);

enum class InnerSolver { ActiveSet, FrankWolfe };

struct NestedSearchOptions {
  InnerSolver inner_solver = InnerSolver::ActiveSet;
  int starts = 5;
  int evaluations_per_start = 500;
  double initial_step = 1.0;
  std::uint64_t seed = 0x5c0ffee;
  /// When the predictors are matched exactly, return the exact-fit weights
  /// closest to uniform instead of whichever minimiser the inner solver hits.
  bool exact_fit_tie_break = true;
};

/// Inner problem: w(V) = argmin over the simplex of sum_r V_r (x0_r - X1_r w)^2.
/// Outer problem: choose diagonal trace-one V to minimise the pre-treatment
/// MSE over all lags. V = softmax(theta), theta searched by Nelder-Mead from
/// the uniform point and seeded perturbations of it.
WeightSolution fit_sc_nested(const PanelData& panel, const PredictorSpec& spec,
                             const FitOptions& opts = {},
                             const NestedSearchOptions& search = {});

/// Runs the estimator named by `id` with its default configuration.
WeightSolution fit(EstimatorId id, const PanelData& panel, const FitOptions& opts = {});

/// alpha_t = y_0t - y_t' w - intercept for every post-treatment period.
Eigen::VectorXd treatment_effects(const PanelData& panel, const WeightSolution& w);

}  // namespace syncon
