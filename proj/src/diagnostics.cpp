#include "syncon/diagnostics.hpp"

#include "syncon/error.hpp"

#include <algorithm>
#include <cmath>

namespace syncon {

namespace {

void require_weight_length(const WeightSolution& w, const FactorModelConfig& cfg) {
  if (w.weights.size() != cfg.controls()) {
    throw Error(ErrorCode::DimensionMismatch, "weight vector length does not match the truth's J");
  }
}

}  // namespace

LoadingDiagnostics implied_loadings(const WeightSolution& w, const FactorModelTruth& truth) {
  const FactorModelConfig& cfg = truth.config;
  require_weight_length(w, cfg);
  const int J = cfg.controls();

  LoadingDiagnostics out;
  out.implied_mu = cfg.loadings.bottomRows(J).transpose() * w.weights;
  out.mu_error = out.implied_mu - cfg.loadings.row(0).transpose();
  if (cfg.covariates) out.implied_z = cfg.covariates->Z.bottomRows(J).transpose() * w.weights;
  out.weight_l1 = w.weights.lpNorm<1>();
  out.weight_l2 = w.weights.norm();
  out.pre_mse = w.pre_mse;
  return out;
}

AssumptionDiagnostics assumption_diagnostics(const FactorModelTruth& truth) {
  const int T0 = truth.config.T0;
  const int J = truth.config.controls();
  const double inv_t = 1.0 / static_cast<double>(T0);
  const Eigen::MatrixXd shocks = truth.shocks.topRows(T0);
  const Eigen::MatrixXd controls = shocks.rightCols(J);

  AssumptionDiagnostics out;
  out.max_eps0_epsj_corr = (inv_t * (controls.transpose() * shocks.col(0))).cwiseAbs().maxCoeff();
  out.max_lambda_eps_corr =
      (inv_t * (truth.factors.topRows(T0).transpose() * controls)).cwiseAbs().maxCoeff();
  out.min_eps_sq = inv_t * controls.colwise().squaredNorm().minCoeff();

  if (J >= 2) {
    Eigen::MatrixXd cross = inv_t * (controls.transpose() * controls);
    cross.diagonal().setZero();
    out.max_cross_eps_corr = cross.cwiseAbs().maxCoeff();
  }
  return out;
}

ErrorDecomposition error_decomposition(const WeightSolution& w, const FactorModelTruth& truth,
                                       int period) {
  const FactorModelConfig& cfg = truth.config;
  require_weight_length(w, cfg);
  if (period < 0 || period >= cfg.T1) {
    throw Error(ErrorCode::InvalidArgument, "period must index a post-treatment period");
  }
  const int J = cfg.controls();
  const int t = cfg.T0 + period;

  const Eigen::VectorXd mu_gap =
      cfg.loadings.row(0).transpose() - cfg.loadings.bottomRows(J).transpose() * w.weights;
  double factor_gap = truth.factors.row(t).dot(mu_gap);
  if (cfg.covariates && truth.theta) {
    const Eigen::MatrixXd& Z = cfg.covariates->Z;
    const Eigen::VectorXd z_gap = Z.row(0).transpose() - Z.bottomRows(J).transpose() * w.weights;
    factor_gap += truth.theta->row(t).dot(z_gap);
  }
  if (w.intercept) factor_gap -= *w.intercept;

  ErrorDecomposition out;
  out.factor_gap = factor_gap;
  out.own_shock = truth.shocks(t, 0);
  out.weighted_shock = truth.shocks.row(t).tail(J).dot(w.weights);
  return out;
}

}  // namespace syncon
