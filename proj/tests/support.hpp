#pragma once

// Shared fixtures and independent oracles for the test suites.

#include "syncon/dgp.hpp"
#include "syncon/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace syncon::test {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(gen);
  return m;
}

inline LsProblem random_problem(std::mt19937_64& gen, Eigen::Index T, Eigen::Index J,
                                Regime regime = Regime::Simplex) {
  LsProblem p;
  p.Y = random_matrix(gen, T, J);
  p.y0 = random_matrix(gen, T, 1).col(0);
  p.regime = regime;
  return p;
}

/// Panel whose first column is the treated unit; T1 trailing rows are post.
inline PanelData make_panel(const Eigen::MatrixXd& y, int T0) {
  PanelData p;
  p.y = y;
  p.T0 = T0;
  p.T1 = static_cast<int>(y.rows()) - T0;
  return p;
}

// ---------------------------------------------------------------------------
// Simplex grid oracle. Enumerates the simplex at step 1e-2, re-enumerates a
// box of half-width 2e-2 around the best point at step 1e-3, then polishes by
// projected gradient descent. Knows nothing about the library's solvers.

inline Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& z) {
  std::vector<double> s(z.data(), z.data() + z.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double acc = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    acc += s[k];
    const double t = (acc - 1.0) / static_cast<double>(k + 1);
    if (s[k] > t) tau = t;
  }
  return (z.array() - tau).max(0.0);
}

struct GridOracle {
  Eigen::VectorXd weights;
  double objective = std::numeric_limits<double>::infinity();
};

inline GridOracle grid_oracle(const LsProblem& p) {
  const Eigen::Index J = p.Y.cols();
  const double T = static_cast<double>(p.Y.rows());
  const Eigen::MatrixXd G = p.Y.transpose() * p.Y / T;
  const Eigen::VectorXd c = p.Y.transpose() * p.y0 / T;
  const double k = p.y0.squaredNorm() / T;
  auto f = [&](const Eigen::VectorXd& w) { return w.dot(G * w) - 2.0 * c.dot(w) + k; };

  GridOracle best;
  Eigen::VectorXd w(J);
  // Enumerate integer compositions of `n` into the first J-1 coordinates,
  // each confined to [lo_j, hi_j] in grid units; the last coordinate takes
  // the remainder.
  auto sweep = [&](int n, const std::vector<int>& lo, const std::vector<int>& hi) {
    std::vector<int> idx(static_cast<std::size_t>(J), 0);
    std::function<void(Eigen::Index, int)> rec = [&](Eigen::Index j, int remaining) {
      if (j == J - 1) {
        if (remaining < lo[j] || remaining > hi[j]) return;
        idx[j] = remaining;
        for (Eigen::Index i = 0; i < J; ++i) w[i] = static_cast<double>(idx[i]) / n;
        const double v = f(w);
        if (v < best.objective) {
          best.objective = v;
          best.weights = w;
        }
        return;
      }
      for (int a = lo[j]; a <= std::min(hi[j], remaining); ++a) {
        idx[j] = a;
        rec(j + 1, remaining - a);
      }
    };
    rec(0, n);
  };

  std::vector<int> lo(static_cast<std::size_t>(J), 0);
  std::vector<int> hi(static_cast<std::size_t>(J), 100);
  sweep(100, lo, hi);
  for (Eigen::Index j = 0; j < J; ++j) {
    const int centre = static_cast<int>(std::lround(best.weights[j] * 1000.0));
    lo[j] = std::max(0, centre - 20);
    hi[j] = std::min(1000, centre + 20);
  }
  sweep(1000, lo, hi);

  const double L = 2.0 * std::max(1e-12, G.eigenvalues().real().maxCoeff());
  Eigen::VectorXd x = best.weights;
  for (int it = 0; it < 20000; ++it) {
    const Eigen::VectorXd grad = 2.0 * (G * x - c);
    x = project_to_simplex(x - grad / L);
  }
  if (f(x) < best.objective) {
    best.objective = f(x);
    best.weights = x;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Normal equations accumulated and solved in long double (80-bit on x86)
// with partially pivoted Gaussian elimination.

inline Eigen::VectorXd long_double_ols(const Eigen::MatrixXd& Y, const Eigen::VectorXd& y0) {
  const auto T = Y.rows();
  const auto J = Y.cols();
  std::vector<std::vector<long double>> a(static_cast<std::size_t>(J),
                                          std::vector<long double>(static_cast<std::size_t>(J) + 1, 0.0L));
  for (Eigen::Index i = 0; i < J; ++i) {
    for (Eigen::Index j = 0; j < J; ++j) {
      long double s = 0.0L;
      for (Eigen::Index t = 0; t < T; ++t) s += static_cast<long double>(Y(t, i)) * Y(t, j);
      a[i][j] = s;
    }
    long double s = 0.0L;
    for (Eigen::Index t = 0; t < T; ++t) s += static_cast<long double>(Y(t, i)) * y0[t];
    a[i][J] = s;
  }
  for (Eigen::Index col = 0; col < J; ++col) {
    Eigen::Index piv = col;
    for (Eigen::Index r = col + 1; r < J; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (Eigen::Index r = col + 1; r < J; ++r) {
      const long double m = a[r][col] / a[col][col];
      for (Eigen::Index c = col; c <= J; ++c) a[r][c] -= m * a[col][c];
    }
  }
  std::vector<long double> x(static_cast<std::size_t>(J));
  for (Eigen::Index r = J - 1; r >= 0; --r) {
    long double s = a[r][J];
    for (Eigen::Index c = r + 1; c < J; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  Eigen::VectorXd out(J);
  for (Eigen::Index j = 0; j < J; ++j) out[j] = static_cast<double>(x[j]);
  return out;
}

}  // namespace syncon::test
