#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "oed/criteria.hpp"
#include "oed/solve.hpp"

namespace oed {

// ---------------------------------------------------------------------------
// Linear-Gaussian models

/// One observation stage: sensor d reports H.row(d) theta + b(d) + noise of
/// variance R(d) when active(d) is non-zero.
struct LinearGaussianStage {
  Eigen::MatrixXd H;  // n_d x n_theta
  Eigen::VectorXd b;
  Eigen::VectorXd R;
  Eigen::VectorXi active;
};

struct LinearGaussianModel {
  Eigen::VectorXd m0;
  Eigen::MatrixXd S0;
  std::vector<LinearGaussianStage> stages;

  int dim() const { return static_cast<int>(m0.size()); }
};

/// Throws ArgumentError on shape mismatches, non-positive variances or a
/// prior covariance that is not symmetric positive definite.
void validate(const LinearGaussianModel& model);

struct LgEig {
  double total = 0.0;
  Eigen::VectorXd increments;
};

/// Stage increments 1/2 log det(I + Sigma_{i-1} F_i) with the sequential
/// precision update Sigma_i^-1 = Sigma_{i-1}^-1 + F_i.
LgEig lg_eig_closed_form(const LinearGaussianModel& model);

/// Tilting surrogate anchored at m0, evaluated analytically: the tilted prior
/// at stage i is N(m0, (S0^-1 + F_{<i})^-1) and the stage term is the mutual
/// information of a linear observation under it, computed in observation
/// space.
double lg_tilt_exact(const LinearGaussianModel& model);

/// Random instance with n_theta parameters and `stages` stages of one or two
/// sensors; activations are random but at least one sensor is active.
LinearGaussianModel random_lg_model(int n_theta, int stages, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Finite discrete models

/// Parameter set {0..P-1} with prior masses; stage i draws y_i from row theta
/// of tables[i] (P x A_i), independently across stages given theta.
/// Unmeasured stages are ignored.
struct DiscreteModel {
  Eigen::VectorXd prior;
  std::vector<Eigen::MatrixXd> tables;
  std::vector<bool> measured;  // empty means all measured
};

void validate(const DiscreteModel& model);

struct MiReport {
  double eig = 0.0;                // I(theta; y_1:M)
  double inst = 0.0;               // sum of instantaneous terms
  Eigen::VectorXd conditional;     // I(theta; y_i | y_1:i-1)
  Eigen::VectorXd instantaneous;   // I(theta; y_i)
  Eigen::VectorXd gaps;            // I(y_i; y_1:i-1)
  int k_time = 0;                  // number of measured stages
};

/// Exact enumeration over (theta, y_1:M); throws CapacityError when the
/// joint support exceeds 1e7 entries.
MiReport enumerate_mi(const DiscreteModel& model);

DiscreteModel random_discrete_model(int params, int stages, int alphabet,
                                    std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Nested Monte Carlo

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Nested estimator of I(theta; y) for a discrete design: outer samples
/// (theta, y) from the particle prior and the likelihood, the marginal
/// likelihood is the exact particle sum when the cloud has at most n_inner
/// atoms, otherwise an average over n_inner prior draws. Each outer sample
/// has its own stream derived from (seed, index).
McEstimate nested_mc_eig(const ProblemSpec& spec, const DiscreteDesign& design,
                         const ParticleCloud& prior, int n_outer, int n_inner,
                         std::uint64_t seed);

McEstimate nested_mc_eig(const DiscreteModel& model, int n_outer, int n_inner,
                         std::uint64_t seed);

/// Plain Monte Carlo estimate of the conditional entropy of one masked
/// observation vector given theta, with sensor d active with probability
/// w(d).
McEstimate mc_conditional_entropy(const Eigen::VectorXd& w,
                                  const NoiseSpec& noise, int samples,
                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Scalar linear-Gaussian benchmark embedded in the design machinery

/// Drift model x' = theta, x(0) = 0, h = x on unit-width cells, so that the
/// rectangle-rule tilt surrogate of the active cells coincides stage by
/// stage with `model`.
struct ScalarLgBenchmark {
  ProblemSpec spec;
  GaussianPrior prior;
  RelaxedDesign design;
  DiscreteDesign discrete;
  LinearGaussianModel model;
};

ScalarLgBenchmark scalar_lg_benchmark();

/// Tilting surrogate of the benchmark with the prior discretized by a
/// Gauss-Hermite rule of the given order.
double scalar_lg_particle_tilt(const ScalarLgBenchmark& bench, int order);

// ---------------------------------------------------------------------------
// Replicator cross-check

/// Integrates the replicator equation of the tilted masses on the product
/// space (atom, center) with RK4, sub-stepping every grid step so that the
/// step times the largest rate stays small. Returns atom masses at the grid
/// nodes, (S+1) x N.
Eigen::MatrixXd replicator_rk4(const ParticleCloud& prior,
                               const std::vector<TiltCenter>& centers,
                               const std::vector<FisherAccumulator>& fisher,
                               const ProblemSpec& spec);

}  // namespace oed
