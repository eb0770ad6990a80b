#pragma once

// Bounded-budget Nelder-Mead minimiser (standard coefficients: reflection 1,
// expansion 2, contraction 1/2, shrink 1/2). Internal to the library.

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <vector>

namespace syncon::detail {

template <typename Objective>
void nelder_mead(Objective&& f, const Eigen::VectorXd& start, double step, int max_evals) {
  const Eigen::Index n = start.size();
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return f(x);
  };

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  pts.reserve(n + 1);
  pts.push_back(start);
  vals.push_back(eval(start));
  for (Eigen::Index i = 0; i < n && evals < max_evals; ++i) {
    Eigen::VectorXd p = start;
    p[i] += step;
    pts.push_back(p);
    vals.push_back(eval(p));
  }
  if (static_cast<Eigen::Index>(pts.size()) < n + 1) return;

  std::vector<std::size_t> order(n + 1);
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    if (vals[worst] - vals[best] <= 1e-14 * (1.0 + std::abs(vals[best]))) return;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < order.size() - 1; ++k) centroid += pts[order[k]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
    const double f_r = eval(reflected);
    if (f_r < vals[best]) {
      if (evals >= max_evals) {
        pts[worst] = reflected;
        vals[worst] = f_r;
        return;
      }
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double f_e = eval(expanded);
      if (f_e < f_r) {
        pts[worst] = expanded;
        vals[worst] = f_e;
      } else {
        pts[worst] = reflected;
        vals[worst] = f_r;
      }
      continue;
    }
    if (f_r < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = f_r;
      continue;
    }
    if (evals >= max_evals) return;
    const bool outside = f_r < vals[worst];
    const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                                               : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double f_c = eval(contracted);
    if (f_c < (outside ? f_r : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = f_c;
      continue;
    }
    for (std::size_t k = 1; k < order.size() && evals < max_evals; ++k) {
      const std::size_t idx = order[k];
      pts[idx] = pts[best] + 0.5 * (pts[idx] - pts[best]);
      vals[idx] = eval(pts[idx]);
    }
  }
}

}  // namespace syncon::detail
