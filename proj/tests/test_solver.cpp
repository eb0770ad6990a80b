#include "support.hpp"
#include "syncon/error.hpp"
#include "syncon/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>

using namespace syncon;
using syncon::test::grid_oracle;
using syncon::test::random_problem;

namespace {

// T=4, J=3 desk instance. The first three rows are matched exactly by the
// feasible point (0.5, 0.3, 0.2); the last row leaves a residual of 0.1 for
// every point of the simplex, so the optimum is 0.1^2 / 4.
LsProblem desk_instance() {
  LsProblem p;
  p.Y.resize(4, 3);
  p.Y << 1, 0, 0,
         0, 1, 0,
         0, 0, 1,
         1, 1, 1;
  p.y0.resize(4);
  p.y0 << 0.5, 0.3, 0.2, 1.1;
  return p;
}
constexpr double kDeskOptimum = 0.0025;

double sum_scale(const LsProblem& p) {
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(p.Y.cols(), 1.0 / p.Y.cols());
  return std::max(1.0, mean_squared_residual(p, u));
}

}  // namespace

TEST_SUITE("simplex") {
  TEST_CASE("single control gets all the weight") {
    LsProblem p;
    p.Y = Eigen::MatrixXd(3, 1);
    p.Y << 1.0, 2.0, 4.0;
    p.y0 = Eigen::Vector3d(0.0, 1.0, 1.0);
    const SolveReport r = solve_simplex_qp(p);
    CHECK(r.weights.size() == 1);
    CHECK(r.weights[0] == 1.0);
    CHECK(r.objective == doctest::Approx((1.0 + 1.0 + 9.0) / 3.0).epsilon(1e-14));
  }

  TEST_CASE("perfect-fit vertex is recovered") {
    std::mt19937_64 gen(11);
    LsProblem p = random_problem(gen, 6, 3);
    p.y0 = p.Y.col(1);
    for (auto solver : {0, 1}) {
      const SolveReport r = solver == 0 ? solve_simplex_qp(p) : solve_simplex_active_set(p);
      CHECK(std::abs(r.weights[0]) < 1e-9);
      CHECK(std::abs(r.weights[1] - 1.0) < 1e-9);
      CHECK(std::abs(r.weights[2]) < 1e-9);
      CHECK(r.objective < 1e-12);
    }
  }

  TEST_CASE("desk instance matches the grid oracle and the frozen optimum") {
    const LsProblem p = desk_instance();
    const SolveReport r = solve_simplex_qp(p);
    const auto oracle = grid_oracle(p);
    CHECK(std::abs(oracle.objective - kDeskOptimum) < 1e-9);
    CHECK(r.objective <= oracle.objective + 1e-6);
    CHECK(std::abs(r.objective - kDeskOptimum) < 1e-10);
    CHECK((r.weights - Eigen::Vector3d(0.5, 0.3, 0.2)).norm() < 1e-6);
    CHECK(r.converged);
  }

  TEST_CASE("both simplex solvers agree with the grid oracle on small random instances") {
    std::mt19937_64 gen(2024);
    for (int i = 0; i < 20; ++i) {
      const auto J = 2 + i % 3;
      const auto T = J + 1 + i % 4;
      const LsProblem p = random_problem(gen, T, J);
      const auto oracle = grid_oracle(p);
      const SolveReport fw = solve_simplex_qp(p);
      const SolveReport as = solve_simplex_active_set(p);
      CHECK(fw.objective <= oracle.objective + 1e-6);
      CHECK(as.objective <= oracle.objective + 1e-6);
      CHECK(std::abs(fw.objective - as.objective) < 1e-8 * sum_scale(p));
    }
  }

  TEST_CASE("solution is feasible and certifies its own gap") {
    std::mt19937_64 gen(5);
    for (int i = 0; i < 10; ++i) {
      const LsProblem p = random_problem(gen, 40, 25);
      const SolveReport r = solve_simplex_qp(p);
      CHECK(r.converged);
      CHECK(r.weights.minCoeff() >= 0.0);
      CHECK(std::abs(r.weights.sum() - 1.0) < 1e-12);
      CHECK(kkt_gap(p, r.weights) <= kDefaultSimplexTol * sum_scale(p) * 1.0001);
    }
  }

  TEST_CASE("rescaling outcomes rescales the objective and keeps the weights") {
    std::mt19937_64 gen(8);
    const LsProblem p = random_problem(gen, 30, 8);
    const SolveReport base = solve_simplex_qp(p);
    for (double k : {0.5, 10.0}) {
      LsProblem q = p;
      q.Y *= k;
      q.y0 *= k;
      const SolveReport r = solve_simplex_qp(q);
      CHECK((r.weights - base.weights).lpNorm<Eigen::Infinity>() < 1e-6);
      CHECK(r.objective == doctest::Approx(k * k * base.objective).epsilon(1e-8));
    }
  }

  TEST_CASE("iteration cap returns the iterate unconverged instead of throwing") {
    std::mt19937_64 gen(3);
    const LsProblem p = random_problem(gen, 60, 40);
    const SolveReport r = solve_simplex_qp(p, 1e-14, 3);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations <= 3);
    CHECK(std::abs(r.weights.sum() - 1.0) < 1e-12);
  }

  TEST_CASE("non-finite input is rejected") {
    LsProblem p = desk_instance();
    p.y0[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_simplex_qp(p), Error);
    try {
      solve_simplex_qp(p);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFinite);
    }
  }
}

TEST_SUITE("adding-up") {
  TEST_CASE("exact representation by one column") {
    std::mt19937_64 gen(21);
    LsProblem p = random_problem(gen, 9, 4, Regime::AddingUp);
    p.y0 = p.Y.col(0);
    const SolveReport r = solve_adding_up_ls(p);
    CHECK((r.weights - Eigen::Vector4d(1, 0, 0, 0)).norm() < 1e-10);
  }

  TEST_CASE("two controls reduce to a scalar regression on the difference") {
    std::mt19937_64 gen(4);
    LsProblem p = random_problem(gen, 12, 2, Regime::AddingUp);
    const Eigen::VectorXd d = p.Y.col(0) - p.Y.col(1);
    const double w1 = (p.y0 - p.Y.col(1)).dot(d) / d.squaredNorm();
    const SolveReport r = solve_adding_up_ls(p);
    CHECK(r.weights[0] == doctest::Approx(w1).epsilon(1e-12));
    CHECK(r.weights[1] == doctest::Approx(1.0 - w1).epsilon(1e-12));
  }

  TEST_CASE("relaxations never fit worse than the simplex") {
    std::mt19937_64 gen(77);
    for (int i = 0; i < 10; ++i) {
      LsProblem p = random_problem(gen, 20, 5);
      const double simplex = solve_simplex_qp(p).objective;
      p.regime = Regime::AddingUp;
      const double addup = solve_adding_up_ls(p).objective;
      p.regime = Regime::Unrestricted;
      const double ols = solve_ols(p).objective;
      CHECK(addup <= simplex + 1e-12);
      CHECK(ols <= addup + 1e-12);
    }
  }

  TEST_CASE("gap is the projected gradient norm") {
    std::mt19937_64 gen(9);
    const LsProblem p = random_problem(gen, 15, 4, Regime::AddingUp);
    const SolveReport r = solve_adding_up_ls(p);
    CHECK(kkt_gap(p, r.weights) < 1e-12);
    CHECK_THROWS_AS(kkt_gap(p, Eigen::Vector4d(1, 1, 0, 0)), Error);
  }
}

TEST_SUITE("ols") {
  TEST_CASE("square full-rank system interpolates") {
    std::mt19937_64 gen(1);
    const LsProblem p = random_problem(gen, 7, 7, Regime::Unrestricted);
    CHECK(solve_ols(p).objective < 1e-20);
  }

  TEST_CASE("exact linear representation") {
    std::mt19937_64 gen(2);
    LsProblem p = random_problem(gen, 10, 4, Regime::Unrestricted);
    p.y0 = 2.0 * p.Y.col(0) - p.Y.col(1);
    const SolveReport r = solve_ols(p);
    CHECK((r.weights - Eigen::Vector4d(2, -1, 0, 0)).norm() < 1e-12);
  }

  TEST_CASE("matches the extended-precision normal equations") {
    std::mt19937_64 gen(30);
    const LsProblem p = random_problem(gen, 30, 6, Regime::Unrestricted);
    const Eigen::VectorXd oracle = syncon::test::long_double_ols(p.Y, p.y0);
    const SolveReport r = solve_ols(p);
    CHECK((r.weights - oracle).norm() <= 1e-9 * oracle.norm());
  }

  TEST_CASE("more controls than periods is rank deficient") {
    std::mt19937_64 gen(6);
    const LsProblem p = random_problem(gen, 4, 6, Regime::Unrestricted);
    try {
      solve_ols(p);
      FAIL("expected RankDeficient");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RankDeficient);
      CHECK(std::string(e.what()).find("T0 >= J required") != std::string::npos);
    }
  }

  TEST_CASE("collinear controls are rank deficient") {
    std::mt19937_64 gen(7);
    LsProblem p = random_problem(gen, 10, 3, Regime::Unrestricted);
    p.Y.col(2) = p.Y.col(0) + p.Y.col(1);
    CHECK_THROWS_AS(solve_ols(p), Error);
  }
}

TEST_SUITE("kkt gap") {
  TEST_CASE("suboptimal vertex has a positive gap") {
    LsProblem p;
    p.Y.resize(3, 2);
    p.Y << 1, 0,
           0, 1,
           1, 0;
    p.y0 = Eigen::Vector3d(1, 0, 1);
    CHECK(kkt_gap(p, Eigen::Vector2d(0, 1)) > 0.1);
    CHECK(kkt_gap(p, Eigen::Vector2d(1, 0)) == doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("gap at uniform weights equals the steepest vertex directional derivative") {
    const LsProblem p = desk_instance();
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    const double h = 1e-5;
    double steepest = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd d = -w;
      d[j] += 1.0;
      const double fd =
          (mean_squared_residual(p, w + h * d) - mean_squared_residual(p, w - h * d)) / (2.0 * h);
      steepest = std::max(steepest, -fd);
    }
    CHECK(std::abs(kkt_gap(p, w) - steepest) < 1e-6);
  }

  TEST_CASE("infeasible weights are rejected") {
    const LsProblem p = desk_instance();
    CHECK_THROWS_AS(kkt_gap(p, Eigen::Vector3d(0.5, 0.6, -0.1)), Error);
    CHECK_THROWS_AS(kkt_gap(p, Eigen::Vector3d(0.5, 0.6, 0.1)), Error);
  }
}
