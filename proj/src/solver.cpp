#include "syncon/solver.hpp"

#include "syncon/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace syncon {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Simplex: return "simplex";
    case Regime::AddingUp: return "adding_up";
    case Regime::Unrestricted: return "unrestricted";
  }
  return "unknown";
}

namespace {

constexpr double kSimplexNegTol = 1e-12;
constexpr double kSumTol = 1e-10;
// Gw is updated incrementally; refresh it from scratch this often so that
// rounding drift cannot accumulate over long runs.
constexpr std::size_t kGradientRefresh = 512;

void require_well_formed(const LsProblem& p) {
  if (p.Y.rows() < 1 || p.Y.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument, "least-squares problem needs T >= 1 and J >= 1");
  }
  if (p.y0.size() != p.Y.rows()) {
    std::ostringstream msg;
    msg << "y0 has length " << p.y0.size() << " but Y has " << p.Y.rows() << " rows";
    throw Error(ErrorCode::DimensionMismatch, msg.str());
  }
  if (!p.y0.allFinite() || !p.Y.allFinite()) {
    throw Error(ErrorCode::NonFinite, "least-squares inputs contain NaN or Inf");
  }
}

void require_enough_periods(const LsProblem& p) {
  if (p.Y.rows() < p.Y.cols()) {
    std::ostringstream msg;
    msg << to_string(p.regime) << " regime: T0 >= J required (T0=" << p.Y.rows()
        << ", J=" << p.Y.cols() << ")";
    throw Error(ErrorCode::RankDeficient, msg.str());
  }
}

// Solves min |b - A x| by column-pivoted QR, rejecting designs whose
// triangular factor is too badly conditioned.
Eigen::VectorXd pivoted_qr_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                 std::string_view what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::Index n = A.cols();
  const auto& r = qr.matrixR();
  const double r_max = std::abs(r(0, 0));
  const double r_min = std::abs(r(n - 1, n - 1));
  if (r_max == 0.0 || r_min == 0.0 || r_max / r_min > kRankConditionLimit) {
    std::ostringstream msg;
    msg << what << " regime: design is rank deficient (condition estimate "
        << (r_min == 0.0 ? std::numeric_limits<double>::infinity() : r_max / r_min)
        << " exceeds " << kRankConditionLimit << ")";
    throw Error(ErrorCode::RankDeficient, msg.str());
  }
  return qr.solve(b);
}

bool simplex_feasible(const Eigen::VectorXd& w) {
  return w.minCoeff() >= -kSimplexNegTol && std::abs(w.sum() - 1.0) <= kSumTol;
}

double frank_wolfe_gap(const Eigen::VectorXd& grad, const Eigen::VectorXd& w) {
  return std::max(0.0, grad.dot(w) - grad.minCoeff());
}

}  // namespace

QuadraticForm QuadraticForm::from_problem(const LsProblem& p) {
  const double inv_t = 1.0 / static_cast<double>(p.Y.rows());
  QuadraticForm q;
  q.gram = Eigen::MatrixXd(p.Y.cols(), p.Y.cols());
  q.gram.setZero();
  q.gram.selfadjointView<Eigen::Lower>().rankUpdate(p.Y.transpose(), inv_t);
  q.gram = q.gram.selfadjointView<Eigen::Lower>();
  q.linear = inv_t * (p.Y.transpose() * p.y0);
  q.constant = inv_t * p.y0.squaredNorm();
  return q;
}

double QuadraticForm::value(const Eigen::VectorXd& w) const {
  return std::max(0.0, w.dot(gram * w) - 2.0 * linear.dot(w) + constant);
}

Eigen::VectorXd QuadraticForm::gradient(const Eigen::VectorXd& w) const {
  return 2.0 * (gram * w - linear);
}

SolveReport solve_simplex_qp(const QuadraticForm& q, double tol, std::size_t max_iter) {
  const Eigen::Index n = q.gram.rows();
  if (n < 1 || q.gram.cols() != n || q.linear.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "quadratic form has inconsistent dimensions");
  }
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "simplex QP tolerance must be positive");
  if (!q.gram.allFinite() || !q.linear.allFinite() || !std::isfinite(q.constant)) {
    throw Error(ErrorCode::NonFinite, "quadratic form contains NaN or Inf");
  }

  SolveReport out;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd gw = q.gram * w;
  const double threshold = tol * std::max(1.0, q.value(w));

  std::size_t iter = 0;
  bool converged = false;
  double gap = 0.0;
  for (;; ++iter) {
    if (iter % kGradientRefresh == 0) gw.noalias() = q.gram * w;
    const Eigen::VectorXd grad = 2.0 * (gw - q.linear);
    const double g_w = grad.dot(w);

    Eigen::Index s = 0;
    grad.minCoeff(&s);
    gap = g_w - grad[s];
    if (gap <= threshold) {
      // Confirm against a freshly computed gradient before stopping.
      gw.noalias() = q.gram * w;
      const Eigen::VectorXd fresh = 2.0 * (gw - q.linear);
      gap = frank_wolfe_gap(fresh, w);
      if (gap <= threshold) {
        converged = true;
        break;
      }
      continue;
    }
    if (iter >= max_iter) break;

    Eigen::Index a = -1;
    double g_a = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (w[j] > 0.0 && grad[j] > g_a) {
        g_a = grad[j];
        a = j;
      }
    }
    const double away_gap = g_a - g_w;
    const double wgw = w.dot(gw);

    if (gap >= away_gap || a < 0 || w[a] >= 1.0) {
      // Toward vertex s: d = e_s - w.
      const double slope = grad[s] - g_w;
      const double curv = q.gram(s, s) - 2.0 * gw[s] + wgw;
      double step = curv > 0.0 ? std::min(1.0, -slope / (2.0 * curv)) : 1.0;
      step = std::max(step, 0.0);
      w *= 1.0 - step;
      w[s] += step;
      gw = (1.0 - step) * gw + step * q.gram.col(s);
    } else {
      // Away from vertex a: d = w - e_a.
      const double max_step = w[a] / (1.0 - w[a]);
      const double slope = g_w - g_a;
      const double curv = wgw - 2.0 * gw[a] + q.gram(a, a);
      double step = curv > 0.0 ? std::min(max_step, -slope / (2.0 * curv)) : max_step;
      step = std::max(step, 0.0);
      w *= 1.0 + step;
      w[a] -= step;
      if (step == max_step) w[a] = 0.0;
      gw = (1.0 + step) * gw - step * q.gram.col(a);
    }
  }

  out.weights = std::move(w);
  out.objective = q.value(out.weights);
  out.kkt_gap = gap;
  out.iterations = iter;
  out.converged = converged;
  return out;
}

SolveReport solve_simplex_qp(const LsProblem& p, double tol, std::size_t max_iter) {
  require_well_formed(p);
  SolveReport out = solve_simplex_qp(QuadraticForm::from_problem(p), tol, max_iter);
  out.objective = mean_squared_residual(p, out.weights);
  return out;
}

SolveReport solve_simplex_active_set(const QuadraticForm& q, double tol, std::size_t max_iter) {
  const Eigen::Index n = q.gram.rows();
  if (n < 1 || q.gram.cols() != n || q.linear.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "quadratic form has inconsistent dimensions");
  }
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "simplex QP tolerance must be positive");
  if (!q.gram.allFinite() || !q.linear.allFinite() || !std::isfinite(q.constant)) {
    throw Error(ErrorCode::NonFinite, "quadratic form contains NaN or Inf");
  }

  // On the simplex f(w) = w' K w with K_ij = <y0 - Y_i, y0 - Y_j>.
  Eigen::MatrixXd K = q.gram;
  K.colwise() -= q.linear;
  K.rowwise() -= q.linear.transpose();
  K.array() += q.constant;

  const double threshold =
      tol * std::max(1.0, q.value(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))));

  Eigen::Index first = 0;
  K.diagonal().minCoeff(&first);
  std::vector<Eigen::Index> support{first};
  std::vector<double> lambda{1.0};

  SolveReport out;
  std::size_t iter = 0;
  double gap = 0.0;
  bool converged = false;
  Eigen::VectorXd kw(n);
  for (;; ++iter) {
    kw.setZero();
    for (std::size_t i = 0; i < support.size(); ++i) kw += lambda[i] * K.col(support[i]);
    double wkw = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) wkw += lambda[i] * kw[support[i]];
    Eigen::Index s = 0;
    const double g_min = kw.minCoeff(&s);
    gap = std::max(0.0, 2.0 * (wkw - g_min));
    if (gap <= threshold) {
      converged = true;
      break;
    }
    if (iter >= max_iter) break;
    // Rounding can leave a tiny positive gap at an already-active vertex;
    // the iteration cannot make progress from there.
    if (std::find(support.begin(), support.end(), s) != support.end()) break;
    support.push_back(s);
    lambda.push_back(0.0);

    for (;;) {
      // Affine minimiser over the support: [K_SS 1; 1' 0][a; nu] = [0; 1].
      const auto m = static_cast<Eigen::Index>(support.size());
      Eigen::MatrixXd kkt(m + 1, m + 1);
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) kkt(i, j) = K(support[i], support[j]);
        kkt(i, m) = 1.0;
        kkt(m, i) = 1.0;
      }
      kkt(m, m) = 0.0;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
      rhs[m] = 1.0;
      const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      const Eigen::VectorXd alpha = sol.head(m);

      if ((alpha.array() > 0.0).all()) {
        for (Eigen::Index i = 0; i < m; ++i) lambda[i] = alpha[i];
        break;
      }
      // Step from lambda toward alpha until the first coordinate hits zero.
      double theta = 1.0;
      Eigen::Index blocking = -1;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (alpha[i] <= 0.0) {
          const double t = lambda[i] / (lambda[i] - alpha[i]);
          if (t < theta || blocking < 0) {
            theta = t;
            blocking = i;
          }
        }
      }
      for (Eigen::Index i = 0; i < m; ++i) lambda[i] += theta * (alpha[i] - lambda[i]);
      lambda[blocking] = 0.0;
      std::vector<Eigen::Index> kept_idx;
      std::vector<double> kept_w;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (lambda[i] > 0.0) {
          kept_idx.push_back(support[i]);
          kept_w.push_back(lambda[i]);
        }
      }
      support.swap(kept_idx);
      lambda.swap(kept_w);
    }
  }

  out.weights = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < support.size(); ++i) out.weights[support[i]] = lambda[i];
  out.objective = q.value(out.weights);
  out.kkt_gap = gap;
  out.iterations = iter;
  out.converged = converged;
  return out;
}

SolveReport solve_simplex_active_set(const LsProblem& p, double tol, std::size_t max_iter) {
  require_well_formed(p);
  SolveReport out = solve_simplex_active_set(QuadraticForm::from_problem(p), tol, max_iter);
  out.objective = mean_squared_residual(p, out.weights);
  return out;
}

SolveReport solve_ols(const LsProblem& p) {
  require_well_formed(p);
  require_enough_periods(p);
  SolveReport out;
  out.weights = pivoted_qr_solve(p.Y, p.y0, to_string(Regime::Unrestricted));
  out.objective = mean_squared_residual(p, out.weights);
  LsProblem as_ols{p.y0, p.Y, Regime::Unrestricted};
  out.kkt_gap = kkt_gap(as_ols, out.weights);
  return out;
}

SolveReport solve_adding_up_ls(const LsProblem& p) {
  require_well_formed(p);
  require_enough_periods(p);
  const Eigen::Index n = p.Y.cols();
  SolveReport out;
  if (n == 1) {
    out.weights = Eigen::VectorXd::Ones(1);
  } else {
    const Eigen::VectorXd last = p.Y.col(n - 1);
    const Eigen::MatrixXd diffs = p.Y.leftCols(n - 1).colwise() - last;
    const Eigen::VectorXd free =
        pivoted_qr_solve(diffs, p.y0 - last, to_string(Regime::AddingUp));
    out.weights.resize(n);
    out.weights.head(n - 1) = free;
    out.weights[n - 1] = 1.0 - free.sum();
  }
  out.objective = mean_squared_residual(p, out.weights);
  LsProblem as_addup{p.y0, p.Y, Regime::AddingUp};
  out.kkt_gap = kkt_gap(as_addup, out.weights);
  return out;
}

SolveReport solve(const LsProblem& p, double tol, std::size_t max_iter) {
  switch (p.regime) {
    case Regime::Simplex: return solve_simplex_qp(p, tol, max_iter);
    case Regime::AddingUp: return solve_adding_up_ls(p);
    case Regime::Unrestricted: return solve_ols(p);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown regime");
}

double mean_squared_residual(const LsProblem& p, const Eigen::VectorXd& w) {
  if (w.size() != p.Y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "weight vector length does not match J");
  }
  return (p.y0 - p.Y * w).squaredNorm() / static_cast<double>(p.Y.rows());
}

double kkt_gap(const LsProblem& p, const Eigen::VectorXd& w) {
  require_well_formed(p);
  if (w.size() != p.Y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "weight vector length does not match J");
  }
  if (!w.allFinite()) throw Error(ErrorCode::InfeasibleInput, "weights contain NaN or Inf");
  const Eigen::VectorXd grad =
      (-2.0 / static_cast<double>(p.Y.rows())) * (p.Y.transpose() * (p.y0 - p.Y * w));
  switch (p.regime) {
    case Regime::Simplex:
      if (!simplex_feasible(w)) {
        throw Error(ErrorCode::InfeasibleInput, "weights are not on the unit simplex");
      }
      return frank_wolfe_gap(grad, w);
    case Regime::AddingUp:
      if (std::abs(w.sum() - 1.0) > kSumTol) {
        throw Error(ErrorCode::InfeasibleInput, "weights do not sum to one");
      }
      return (grad.array() - grad.mean()).abs().maxCoeff();
    case Regime::Unrestricted:
      return grad.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

}  // namespace syncon
