#pragma once

// Ground-truth diagnostics for simulated panels. Everything here needs the
// factor-model truth and is therefore unavailable on real data.

#include "syncon/dgp.hpp"
#include "syncon/estimators.hpp"

#include <Eigen/Dense>

#include <optional>

namespace syncon {

struct LoadingDiagnostics {
  Eigen::VectorXd implied_mu;                // M_J' w, length F
  std::optional<Eigen::VectorXd> implied_z;  // Z_J' w, length q
  Eigen::VectorXd mu_error;                  // implied_mu - mu_0
  double weight_l1 = 0.0;
  double weight_l2 = 0.0;
  double pre_mse = 0.0;
};

LoadingDiagnostics implied_loadings(const WeightSolution& w, const FactorModelTruth& truth);

/// Pre-period sample moments that govern the estimator's convergence rate.
struct AssumptionDiagnostics {
  double max_eps0_epsj_corr = 0.0;   // max_j |T0^-1 sum_t e_0t e_jt|
  double max_lambda_eps_corr = 0.0;  // max_{f,j} |T0^-1 sum_t lambda_ft e_jt|
  double min_eps_sq = 0.0;           // min_j T0^-1 sum_t e_jt^2
  double max_cross_eps_corr = 0.0;   // max_{i != j} |T0^-1 sum_t e_it e_jt|, controls only
};

AssumptionDiagnostics assumption_diagnostics(const FactorModelTruth& truth);

/// alpha_hat_t - alpha_t = factor_gap + own_shock - weighted_shock, where
///   factor_gap     = lambda_t'(mu_0 - M_J' w) + theta_t'(z_0 - Z_J' w)
///   own_shock      = e_0t
///   weighted_shock = e_t' w
/// The demeaned estimator's intercept is folded into factor_gap.
struct ErrorDecomposition {
  double factor_gap = 0.0;
  double own_shock = 0.0;
  double weighted_shock = 0.0;

  double total() const { return factor_gap + own_shock - weighted_shock; }
};

/// `period` indexes post-treatment periods from 0.
ErrorDecomposition error_decomposition(const WeightSolution& w, const FactorModelTruth& truth,
                                       int period);

}  // namespace syncon
