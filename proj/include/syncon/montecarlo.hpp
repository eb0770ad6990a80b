#pragma once

// Replication engine for the simulation designs.
//
// Each replication draws its panel from its own counter-based RNG stream, so
// results do not depend on how replications are scheduled. Aggregation walks
// the replications in index order, which makes summaries bit-identical for
// any parallelism level.

#include "syncon/diagnostics.hpp"
#include "syncon/dgp.hpp"
#include "syncon/error.hpp"
#include "syncon/estimators.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>

namespace syncon {

struct EstimatorOutcome {
  std::optional<WeightSolution> solution;
  std::optional<LoadingDiagnostics> loadings;
  Eigen::VectorXd alpha_hat;
  std::optional<ErrorCode> failure_code;
  std::string failure;

  bool ok() const { return solution.has_value(); }
};

using ReplicationResult = std::map<EstimatorId, EstimatorOutcome>;

/// Draws replication `rep` and fits every requested estimator. Estimator
/// failures are recorded in the outcome rather than thrown.
ReplicationResult run_replication(const ScenarioConfig& s, int rep);

struct EstimatorSummary {
  Eigen::VectorXd mean_mu;
  Eigen::VectorXd sd_mu;
  std::optional<Eigen::VectorXd> mean_z;
  std::optional<Eigen::VectorXd> sd_z;
  double mean_alpha1 = 0.0;
  double sd_alpha1 = 0.0;
  double mean_pre_mse = 0.0;
  double mean_l2 = 0.0;
  double mean_mu_error_l2 = 0.0;  // mean of |mu_hat - mu_0|_2
  int successes = 0;
  int failures = 0;
  std::string first_failure;
};

struct McSummary {
  ScenarioConfig scenario;
  std::map<EstimatorId, EstimatorSummary> per_estimator;
};

/// Sample means and (R-1)-denominator standard deviations over successful
/// replications. Throws AllReplicationsFailed when some estimator never
/// succeeded.
McSummary run_mc(const ScenarioConfig& s, int parallelism = 1);

struct VarianceCheck {
  double sd_alpha = 0.0;
  double predicted = 0.0;  // sigma / sqrt(1 - c)
  int T0 = 0;
};

/// One-factor design with unrestricted OLS weights; compares the replication
/// sd of the first post-period effect with sigma / sqrt(1 - J/T0).
/// T0 = round(J / c); use the explicit-T0 overload for c = 0 proxies.
VarianceCheck simple_example_variance(double c, int J, double sigma, int reps, std::uint64_t seed,
                                      int parallelism = 1);
VarianceCheck simple_example_variance_explicit(int J, int T0, double sigma, int reps,
                                               std::uint64_t seed, int parallelism = 1);

}  // namespace syncon
