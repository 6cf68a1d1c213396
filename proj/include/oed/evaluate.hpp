#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "oed/measure.hpp"
#include "oed/solve.hpp"

namespace oed {

struct Observation {
  double time = 0.0;
  int sensor = 0;
  int cell = 0;
  double value = 0.0;
};

struct Dataset {
  std::vector<Observation> records;  // one per activation, same order
  Eigen::VectorXd theta_true;
  std::uint64_t seed = 0;
};

/// y = h_d(x(t; theta_true, u)) + sigma_d * N(0, 1), drawn in activation
/// order from a stream seeded by `seed`.
Dataset simulate_data(const ProblemSpec& spec, const DiscreteDesign& design,
                      const Eigen::VectorXd& theta_true, std::uint64_t seed);

struct MleOptions {
  int max_iters = 200;
  double rel_tol = 1e-8;
  int top_atoms = 9;
};

struct MleResult {
  Eigen::VectorXd theta;
  double objective = 0.0;  // sum (y - h)^2 / (2 sigma^2)
  bool ok = false;
  int best_start = -1;
};

/// Least-squares fit of the Gaussian likelihood. Starts are the `top_atoms`
/// heaviest atoms of `cloud` (ties by index) followed by the cloud mean. Each
/// start runs Levenberg-Marquardt on a box given by a bounded prior's
/// support, or on log(theta) for positive priors; a start whose descent
/// fails is retried with Nelder-Mead. The best final point wins.
MleResult mle_fit(const ProblemSpec& spec, const DiscreteDesign& design,
                  const Dataset& data, const PriorSpec& prior,
                  const ParticleCloud& cloud, const MleOptions& opts = {});

struct EvalRow {
  std::string method;
  int run = 0;
  Eigen::VectorXd theta_true;
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd err;
  double err_l2 = 0.0;
  bool ok = true;
};

struct MethodSummary {
  std::string method;
  int completed = 0;
  int failed = 0;
  double median_l2 = 0.0;
  double mean_l2 = 0.0;
};

struct EvalReport {
  int dim = 0;
  std::vector<std::string> methods;
  std::vector<EvalRow> rows;  // run-major, then method order

  std::vector<MethodSummary> summary() const;
  /// Euclidean errors of `method` by run; failed runs are NaN.
  std::vector<double> errors(const std::string& method) const;
};

/// Paired Monte Carlo study: run r draws theta_true from the continuous prior
/// and one noise seed from a stream derived from (seed, r); every method sees
/// both.
EvalReport mc_evaluate(const ProblemSpec& spec,
                       const std::vector<std::pair<std::string, DiscreteDesign>>& designs,
                       const PriorSpec& prior, const ParticleCloud& cloud,
                       int runs, std::uint64_t seed, const MleOptions& opts = {});

/// CSV with header method,run,theta_true_*,theta_hat_*,err_*,err_l2,status.
void write_csv(const EvalReport& report, std::ostream& out);
EvalReport read_csv(std::istream& in);

bool same_report(const EvalReport& a, const EvalReport& b);

struct SignTest {
  int wins = 0;    // runs where a has the smaller error
  int losses = 0;
  int ties = 0;
  double p_value = 1.0;  // two-sided exact binomial
};

/// Paired sign test of the Euclidean errors of methods a and b over runs
/// where both fits completed.
SignTest sign_test(const EvalReport& report, const std::string& a,
                   const std::string& b);

double median(std::vector<double> v);

}  // namespace oed
