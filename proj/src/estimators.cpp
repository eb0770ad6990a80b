#include "syncon/estimators.hpp"

#include "nelder_mead.hpp"
#include "syncon/error.hpp"
#include "syncon/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>
#include <limits>
#include <string>

namespace syncon {

std::string_view to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::Sc: return "sc";
    case EstimatorId::ScDemeaned: return "sc_demeaned";
    case EstimatorId::Ols: return "ols";
    case EstimatorId::OlsAddUp: return "ols_addup";
    case EstimatorId::ScNestedHalfLags: return "sc_nested_halflags";
    case EstimatorId::ScNestedMean: return "sc_nested_mean";
  }
  return "unknown";
}

EstimatorId parse_estimator_id(std::string_view name) {
  for (EstimatorId id : kAllEstimators) {
    if (name == to_string(id)) return id;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

namespace {

void require_pre_periods(const PanelData& panel, int minimum) {
  panel.validate();
  if (panel.T0 < minimum) {
    throw Error(ErrorCode::InvalidArgument,
                "estimator needs T0 >= " + std::to_string(minimum) + " pre-treatment periods");
  }
}

WeightSolution finish(EstimatorId id, SolveReport report, double pre_mse) {
  WeightSolution out;
  out.regime = id;
  out.pre_mse = pre_mse;
  out.l1_norm = report.weights.lpNorm<1>();
  out.l2_norm = report.weights.norm();
  out.weights = report.weights;
  out.report = std::move(report);
  return out;
}

// Subtracts each column's pre-period mean. Differences are anchored at the
// first period so that adding an exactly representable constant to a column
// leaves its demeaned values bit-identical.
Eigen::MatrixXd demean_columns(const Eigen::MatrixXd& block) {
  Eigen::MatrixXd out = block.rowwise() - block.row(0);
  out.rowwise() -= out.colwise().mean();
  return out;
}

constexpr double kExactFitTol = 1e-14;

double softmax_into(const Eigen::VectorXd& theta, Eigen::VectorXd& v) {
  const double top = theta.maxCoeff();
  v = (theta.array() - top).exp();
  const double total = v.sum();
  v /= total;
  return total;
}


// Euclidean projection onto the probability simplex. `support` receives the
// indices left strictly positive.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& z, std::vector<Eigen::Index>& support) {
  std::vector<double> sorted(z.data(), z.data() + z.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double running = 0.0;
  double shift = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    running += sorted[k];
    const double candidate = (running - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) shift = candidate;
  }
  Eigen::VectorXd w = (z.array() - shift).max(0.0);
  support.clear();
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w[j] > 0.0) support.push_back(j);
  }
  return w;
}

// When the predictors can be matched exactly the inner minimiser is a whole
// face {w in simplex : B w = 0}, the same face for every positive V. Returns
// the point of that face closest to uniform weights, found by semismooth
// Newton ascent on the dual of min |w - 1/J|^2 s.t. B w = 0. Empty when the
// iteration does not reach feasibility.
std::optional<Eigen::VectorXd> closest_exact_fit(Eigen::MatrixXd B) {
  const Eigen::Index R = B.rows();
  const Eigen::Index J = B.cols();
  for (Eigen::Index r = 0; r < R; ++r) {
    const double n = B.row(r).norm();
    if (n > 0.0) B.row(r) /= n;
  }
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(J, 1.0 / static_cast<double>(J));
  std::vector<Eigen::Index> support;
  auto dual = [&](const Eigen::VectorXd& lambda, Eigen::VectorXd& w, Eigen::VectorXd& resid) {
    w = project_simplex(u - B.transpose() * lambda, support);
    resid.noalias() = B * w;
    return 0.5 * (w - u).squaredNorm() + lambda.dot(resid);
  };

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(R);
  Eigen::VectorXd w;
  Eigen::VectorXd resid;
  double g = dual(lambda, w, resid);
  for (int it = 0; it < 200; ++it) {
    if (resid.lpNorm<Eigen::Infinity>() <= 1e-11) return w;
    const auto S = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd Bs(R, S);
    for (Eigen::Index k = 0; k < S; ++k) Bs.col(k) = B.col(support[k]);
    const Eigen::VectorXd row_sums = Bs.rowwise().sum();
    Eigen::MatrixXd H = Bs * Bs.transpose() - row_sums * row_sums.transpose() / static_cast<double>(S);
    H.diagonal().array() += 1e-12 * std::max(1.0, H.diagonal().maxCoeff());
    const Eigen::VectorXd step = H.completeOrthogonalDecomposition().solve(resid);
    const double slope = resid.dot(step);
    if (!(slope > 0.0)) return std::nullopt;

    double t = 1.0;
    Eigen::VectorXd w_next;
    Eigen::VectorXd resid_next;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = lambda + t * step;
      const double g_next = dual(trial, w_next, resid_next);
      if (g_next >= g + 1e-4 * t * slope) {
        lambda = trial;
        g = g_next;
        accepted = true;
        break;
      }
    }
    if (!accepted) return std::nullopt;
    w = std::move(w_next);
    resid = std::move(resid_next);
  }
  return std::nullopt;
}

}  // namespace

WeightSolution fit_sc(const PanelData& panel, const FitOptions& opts) {
  require_pre_periods(panel, 2);
  LsProblem p{panel.treated_pre(), panel.controls_pre(), Regime::Simplex};
  SolveReport report = solve_simplex_qp(p, opts.tol, opts.max_iter);
  const double mse = report.objective;
  return finish(EstimatorId::Sc, std::move(report), mse);
}

WeightSolution fit_demeaned_sc(const PanelData& panel, const FitOptions& opts) {
  require_pre_periods(panel, 2);
  const Eigen::MatrixXd pre = panel.y.topRows(panel.T0);
  const Eigen::MatrixXd centered = demean_columns(pre);
  LsProblem p{centered.col(0), centered.rightCols(panel.controls()), Regime::Simplex};
  SolveReport report = solve_simplex_qp(p, opts.tol, opts.max_iter);
  const double mse = report.objective;
  WeightSolution out = finish(EstimatorId::ScDemeaned, std::move(report), mse);
  const Eigen::RowVectorXd means = pre.colwise().mean();
  out.intercept = means[0] - means.tail(panel.controls()).dot(out.weights);
  return out;
}

WeightSolution fit_ols(const PanelData& panel, OlsConstraint constraint) {
  require_pre_periods(panel, 1);
  const bool addup = constraint == OlsConstraint::AddingUp;
  LsProblem p{panel.treated_pre(), panel.controls_pre(),
              addup ? Regime::AddingUp : Regime::Unrestricted};
  SolveReport report = addup ? solve_adding_up_ls(p) : solve_ols(p);
  const double mse = report.objective;
  return finish(addup ? EstimatorId::OlsAddUp : EstimatorId::Ols, std::move(report), mse);
}

Predictors build_predictors(const PanelData& panel, const PredictorSpec& spec) {
  panel.validate();
  if (spec.include_covariates && !panel.covariates) {
    throw Error(ErrorCode::MissingCovariates, "predictor spec asks for covariates but the panel has none");
  }
  const int J = panel.controls();
  const Eigen::MatrixXd pre = panel.y.topRows(panel.T0);

  Eigen::MatrixXd lags;
  switch (spec.lag_selector) {
    case LagSelector::AllLags: lags = pre; break;
    case LagSelector::FirstHalfLags: lags = pre.topRows((panel.T0 + 1) / 2); break;
    case LagSelector::MeanOfLags: lags = pre.colwise().mean(); break;
  }
  const Eigen::Index q = spec.include_covariates ? panel.covariates->cols() : 0;
  const Eigen::Index rows = lags.rows() + q;

  Predictors out;
  out.x0.resize(rows);
  out.X1.resize(rows, J);
  out.x0.head(lags.rows()) = lags.col(0);
  out.X1.topRows(lags.rows()) = lags.rightCols(J);
  if (q > 0) {
    const Eigen::MatrixXd& Z = *panel.covariates;
    out.x0.tail(q) = Z.row(0).transpose();
    out.X1.bottomRows(q) = Z.bottomRows(J).transpose();
  }
  return out;
}

WeightSolution fit_sc_nested(const PanelData& panel, const PredictorSpec& spec,
                             const FitOptions& opts, const NestedSearchOptions& search) {
  require_pre_periods(panel, 2);
  const Predictors pred = build_predictors(panel, spec);
  const Eigen::Index R = pred.x0.size();
  EstimatorId id = EstimatorId::Sc;
  if (spec.lag_selector == LagSelector::FirstHalfLags) id = EstimatorId::ScNestedHalfLags;
  if (spec.lag_selector == LagSelector::MeanOfLags) id = EstimatorId::ScNestedMean;

  const LsProblem outer{panel.treated_pre(), panel.controls_pre(), Regime::Simplex};
  const QuadraticForm outer_form = QuadraticForm::from_problem(outer);

  // The exact-fit face does not depend on V, so its tie-break point is
  // computed once per fit.
  std::optional<Eigen::VectorXd> exact_face;
  bool exact_face_tried = false;
  QuadraticForm inner;
  inner.linear.resize(pred.X1.cols());
  auto solve_inner = [&](const Eigen::VectorXd& v) {
    const Eigen::MatrixXd scaled = pred.X1.array().colwise() * v.array().sqrt();
    inner.gram.setZero(pred.X1.cols(), pred.X1.cols());
    inner.gram.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    inner.gram = inner.gram.selfadjointView<Eigen::Lower>();
    inner.linear.noalias() = pred.X1.transpose() * v.cwiseProduct(pred.x0);
    inner.constant = v.dot(pred.x0.cwiseAbs2());
    SolveReport r = search.inner_solver == InnerSolver::ActiveSet
                        ? solve_simplex_active_set(inner, opts.tol, opts.max_iter)
                        : solve_simplex_qp(inner, opts.tol, opts.max_iter);
    if (search.exact_fit_tie_break && r.objective <= kExactFitTol * std::max(1.0, inner.constant)) {
      if (!exact_face_tried) {
        exact_face = closest_exact_fit(pred.X1 - pred.x0 * Eigen::RowVectorXd::Ones(pred.X1.cols()));
        exact_face_tried = true;
      }
      if (exact_face) {
        r.weights = *exact_face;
        r.objective = inner.value(r.weights);
        const Eigen::VectorXd grad = inner.gradient(r.weights);
        r.kkt_gap = grad.dot(r.weights) - grad.minCoeff();
      }
    }
    return r;
  };

  auto make_solution = [&](SolveReport report, const Eigen::VectorXd& v) {
    const double mse = mean_squared_residual(outer, report.weights);
    WeightSolution out = finish(id, std::move(report), mse);
    out.predictor_weights = v;
    return out;
  };

  if (spec.v_weights) {
    const Eigen::VectorXd& v = *spec.v_weights;
    if (v.size() != R) {
      throw Error(ErrorCode::DimensionMismatch, "v_weights length must equal the predictor count");
    }
    if ((v.array() < 0.0).any() || std::abs(v.sum() - 1.0) > 1e-10) {
      throw Error(ErrorCode::InvalidArgument, "v_weights must be non-negative and sum to one");
    }
    return make_solution(solve_inner(v), v);
  }

  double best_value = std::numeric_limits<double>::infinity();
  SolveReport best_report;
  Eigen::VectorXd best_v;
  Eigen::VectorXd v(R);
  auto objective = [&](const Eigen::VectorXd& theta) {
    softmax_into(theta, v);
    SolveReport r = solve_inner(v);
    const double value = outer_form.value(r.weights);
    if (value < best_value) {
      best_value = value;
      best_report = std::move(r);
      best_v = v;
    }
    return value;
  };

  for (int start = 0; start < search.starts; ++start) {
    Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(R);
    if (start > 0) {
      CounterRng rng(StreamKey{search.seed, static_cast<std::uint64_t>(start)}, 0);
      for (Eigen::Index r = 0; r < R; ++r) theta0[r] = rng.normal();
    }
    detail::nelder_mead(objective, theta0, search.initial_step, search.evaluations_per_start);
  }
  if (best_v.size() == 0) {
    throw Error(ErrorCode::OuterSearchFailed, "nested V search evaluated no candidate");
  }
  return make_solution(std::move(best_report), best_v);
}

WeightSolution fit(EstimatorId id, const PanelData& panel, const FitOptions& opts) {
  switch (id) {
    case EstimatorId::Sc: return fit_sc(panel, opts);
    case EstimatorId::ScDemeaned: return fit_demeaned_sc(panel, opts);
    case EstimatorId::Ols: return fit_ols(panel, OlsConstraint::Unrestricted);
    case EstimatorId::OlsAddUp: return fit_ols(panel, OlsConstraint::AddingUp);
    case EstimatorId::ScNestedHalfLags:
      return fit_sc_nested(panel, {LagSelector::FirstHalfLags, true, std::nullopt}, opts);
    case EstimatorId::ScNestedMean:
      return fit_sc_nested(panel, {LagSelector::MeanOfLags, true, std::nullopt}, opts);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimator");
}

Eigen::VectorXd treatment_effects(const PanelData& panel, const WeightSolution& w) {
  if (w.weights.size() != panel.controls()) {
    throw Error(ErrorCode::DimensionMismatch, "weight vector length does not match J");
  }
  Eigen::VectorXd alpha = panel.treated_post() - panel.controls_post() * w.weights;
  if (w.intercept) alpha.array() -= *w.intercept;
  return alpha;
}

}  // namespace syncon
