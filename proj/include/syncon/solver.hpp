#pragma once

// Dense least-squares kernels used by every weight estimator.
//
// All three problems have the form "fit y0 on the columns of Y":
//   Simplex       min (1/T) |y0 - Y w|^2  s.t. w >= 0, sum(w) = 1
//   AddingUp      min (1/T) |y0 - Y w|^2  s.t. sum(w) = 1
//   Unrestricted  min (1/T) |y0 - Y w|^2

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>

namespace syncon {

enum class Regime { Simplex, AddingUp, Unrestricted };

std::string_view to_string(Regime regime);

struct LsProblem {
  Eigen::VectorXd y0;  // length T
  Eigen::MatrixXd Y;   // T x J, column j = control unit j
  Regime regime = Regime::Simplex;

  Eigen::Index periods() const { return Y.rows(); }
  Eigen::Index units() const { return Y.cols(); }
};

struct SolveReport {
  Eigen::VectorXd weights;
  double objective = 0.0;  // mean squared residual
  double kkt_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
};

/// f(w) = w' G w - 2 c' w + k. The Gram representation of a least-squares
/// objective; lets callers reuse one factorization across many solves and
/// express weighted (V-norm) problems without forming sqrt(V).
struct QuadraticForm {
  Eigen::MatrixXd gram;
  Eigen::VectorXd linear;
  double constant = 0.0;

  static QuadraticForm from_problem(const LsProblem& p);

  double value(const Eigen::VectorXd& w) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
};

inline constexpr double kDefaultSimplexTol = 1e-10;
inline constexpr std::size_t kDefaultSimplexMaxIter = 200000;
inline constexpr double kRankConditionLimit = 1e12;

/// Frank-Wolfe with away steps from the uniform point, exact line search.
/// Stops once the duality gap falls below tol * max(1, f(uniform)).
/// Running out of iterations is not an error: the best iterate comes back
/// with converged = false.
SolveReport solve_simplex_qp(const LsProblem& p, double tol = kDefaultSimplexTol,
                             std::size_t max_iter = kDefaultSimplexMaxIter);
SolveReport solve_simplex_qp(const QuadraticForm& q, double tol = kDefaultSimplexTol,
                             std::size_t max_iter = kDefaultSimplexMaxIter);

/// Exact active-set alternative for the same problem: Wolfe's minimum-norm
/// point iteration on the points y0 - Y_j. Terminates finitely; uses the same
/// duality-gap stopping rule as the Frank-Wolfe solver. Preferred when the
/// Gram matrix is low rank and the optimum is not unique.
SolveReport solve_simplex_active_set(const LsProblem& p, double tol = kDefaultSimplexTol,
                                     std::size_t max_iter = kDefaultSimplexMaxIter);
SolveReport solve_simplex_active_set(const QuadraticForm& q, double tol = kDefaultSimplexTol,
                                     std::size_t max_iter = kDefaultSimplexMaxIter);

/// Least squares under sum(w) = 1 only, by eliminating the last weight.
SolveReport solve_adding_up_ls(const LsProblem& p);

/// Unconstrained least squares through a column-pivoted Householder QR.
SolveReport solve_ols(const LsProblem& p);

/// Dispatches on p.regime.
SolveReport solve(const LsProblem& p, double tol = kDefaultSimplexTol,
                  std::size_t max_iter = kDefaultSimplexMaxIter);

/// Optimality certificate at a feasible w.
///   Simplex: Frank-Wolfe gap max_v grad(w)'(w - v) over the vertices.
///   AddingUp: sup-norm of the gradient projected onto {sum = 0}.
///   Unrestricted: sup-norm of the gradient.
/// Throws InfeasibleInput when w violates the regime's constraints.
double kkt_gap(const LsProblem& p, const Eigen::VectorXd& w);

double mean_squared_residual(const LsProblem& p, const Eigen::VectorXd& w);

}  // namespace syncon
