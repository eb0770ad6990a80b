#include "syncon/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace syncon {

namespace {

// Compact per-replication record kept for the ordered reduction.
struct Draw {
  bool ok = false;
  Eigen::VectorXd mu;
  Eigen::VectorXd z;
  double alpha1 = 0.0;
  double pre_mse = 0.0;
  double l2 = 0.0;
  double mu_error_l2 = 0.0;
  std::string failure;
};

// Runs body(i) for i in [0, count) on up to `parallelism` threads. The first
// exception thrown by any task is rethrown on the calling thread.
template <typename Body>
void parallel_for(int count, int parallelism, Body&& body) {
  const int workers = std::clamp(parallelism, 1, std::max(count, 1));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

double mean_of(const std::vector<double>& xs) {
  double total = 0.0;
  for (double x : xs) total += x;
  return xs.empty() ? 0.0 : total / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

void vector_moments(const std::vector<const Eigen::VectorXd*>& xs, Eigen::VectorXd& mean,
                    Eigen::VectorXd& sd) {
  const Eigen::Index dim = xs.front()->size();
  mean = Eigen::VectorXd::Zero(dim);
  sd = Eigen::VectorXd::Zero(dim);
  for (const auto* x : xs) mean += *x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  for (const auto* x : xs) sd += (*x - mean).cwiseAbs2();
  sd = (sd / static_cast<double>(xs.size() - 1)).cwiseSqrt();
}

EstimatorSummary summarize(const std::vector<Draw>& draws, bool has_covariates) {
  EstimatorSummary out;
  std::vector<const Eigen::VectorXd*> mus;
  std::vector<const Eigen::VectorXd*> zs;
  std::vector<double> alpha;
  std::vector<double> mse;
  std::vector<double> l2;
  std::vector<double> mu_err;
  for (const Draw& d : draws) {
    if (!d.ok) {
      ++out.failures;
      if (out.first_failure.empty()) out.first_failure = d.failure;
      continue;
    }
    ++out.successes;
    mus.push_back(&d.mu);
    if (has_covariates) zs.push_back(&d.z);
    alpha.push_back(d.alpha1);
    mse.push_back(d.pre_mse);
    l2.push_back(d.l2);
    mu_err.push_back(d.mu_error_l2);
  }
  if (out.successes == 0) return out;
  vector_moments(mus, out.mean_mu, out.sd_mu);
  if (has_covariates) {
    out.mean_z.emplace();
    out.sd_z.emplace();
    vector_moments(zs, *out.mean_z, *out.sd_z);
  }
  out.mean_alpha1 = mean_of(alpha);
  out.sd_alpha1 = sd_of(alpha, out.mean_alpha1);
  out.mean_pre_mse = mean_of(mse);
  out.mean_l2 = mean_of(l2);
  out.mean_mu_error_l2 = mean_of(mu_err);
  return out;
}

}  // namespace

ReplicationResult run_replication(const ScenarioConfig& s, int rep) {
  const SimulatedPanel sim = make_scenario_panel(s, rep);
  ReplicationResult out;
  for (EstimatorId id : s.estimators) {
    EstimatorOutcome outcome;
    try {
      WeightSolution w = fit(id, sim.panel);
      outcome.alpha_hat = treatment_effects(sim.panel, w);
      outcome.loadings = implied_loadings(w, sim.truth);
      outcome.solution = std::move(w);
    } catch (const Error& e) {
      outcome.failure_code = e.code();
      outcome.failure = std::string(to_string(e.code())) + ": " + e.what();
    }
    out[id] = std::move(outcome);
  }
  return out;
}

McSummary run_mc(const ScenarioConfig& s, int parallelism) {
  s.validate();
  if (s.replications < 2) {
    throw Error(ErrorCode::InvalidScenario, "Monte Carlo needs replications >= 2");
  }
  const int reps = s.replications;
  std::vector<EstimatorId> ids = s.estimators;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  // draws[k][rep] for estimator ids[k].
  std::vector<std::vector<Draw>> draws(ids.size(), std::vector<Draw>(reps));
  parallel_for(reps, parallelism, [&](int rep) {
    const ReplicationResult result = run_replication(s, rep);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const EstimatorOutcome& o = result.at(ids[k]);
      Draw& d = draws[k][rep];
      d.ok = o.ok();
      if (!d.ok) {
        d.failure = o.failure;
        continue;
      }
      d.mu = o.loadings->implied_mu;
      if (o.loadings->implied_z) d.z = *o.loadings->implied_z;
      d.alpha1 = o.alpha_hat[0];
      d.pre_mse = o.solution->pre_mse;
      d.l2 = o.solution->l2_norm;
      d.mu_error_l2 = o.loadings->mu_error.norm();
    }
  });

  McSummary summary;
  summary.scenario = s;
  const bool has_covariates = s.kind == ScenarioKind::TwoFactorCovariates;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    EstimatorSummary est = summarize(draws[k], has_covariates);
    if (est.successes == 0) {
      throw Error(ErrorCode::AllReplicationsFailed,
                  "estimator '" + std::string(to_string(ids[k])) +
                      "' failed in every replication; first failure: " + est.first_failure);
    }
    summary.per_estimator.emplace(ids[k], std::move(est));
  }
  return summary;
}

VarianceCheck simple_example_variance_explicit(int J, int T0, double sigma, int reps,
                                               std::uint64_t seed, int parallelism) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  if (T0 < J) throw Error(ErrorCode::InvalidArgument, "simple example needs T0 >= J");
  ScenarioConfig s;
  s.kind = ScenarioKind::SimpleExampleF1;
  s.J = J;
  s.t0_rule = T0Rule{T0Rule::Kind::Explicit, T0};
  s.seed = seed;
  s.replications = reps;
  s.estimators = {EstimatorId::Ols};
  s.shock_sd = sigma;
  const McSummary summary = run_mc(s, parallelism);

  VarianceCheck out;
  out.T0 = T0;
  out.sd_alpha = summary.per_estimator.at(EstimatorId::Ols).sd_alpha1;
  const double c = static_cast<double>(J) / static_cast<double>(T0);
  out.predicted = sigma / std::sqrt(1.0 - c);
  return out;
}

VarianceCheck simple_example_variance(double c, int J, double sigma, int reps, std::uint64_t seed,
                                      int parallelism) {
  if (!(c > 0.0 && c < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "c must lie in (0, 1); use the explicit-T0 form for a c = 0 proxy");
  }
  const int T0 = static_cast<int>(std::lround(static_cast<double>(J) / c));
  VarianceCheck out = simple_example_variance_explicit(J, T0, sigma, reps, seed, parallelism);
  out.predicted = sigma / std::sqrt(1.0 - c);
  return out;
}

}  // namespace syncon
