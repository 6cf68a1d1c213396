#pragma once

#include <vector>

#include <Eigen/Core>

#include "oed/dynamics.hpp"
#include "oed/measure.hpp"
#include "oed/problem.hpp"

namespace oed {

/// Piecewise-constant relaxed design: controls u (N_u x n_u) and sampling
/// weights w (N_w x n_exp) in [0, 1].
struct RelaxedDesign {
  Eigen::MatrixXd u;
  Eigen::MatrixXd w;
};

/// Objective value (to be minimized) and its gradient over the decision
/// layout [u cells (interval-major) | w cells (cell-major)].
struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

Eigen::VectorXd pack_design(const RelaxedDesign& design);
RelaxedDesign unpack_design(const Eigen::VectorXd& z, const ProblemSpec& spec);

// ---------------------------------------------------------------------------
// Sensor configurations. Configuration eta is indexed by the bitmask whose
// bit d is eta_d; index 0 is the null configuration.

struct ConfigTable {
  int sensors = 0;
  std::vector<std::vector<int>> active;  // active sensors of each eta

  int size() const { return static_cast<int>(active.size()); }
};

ConfigTable config_table(int sensors);

/// pi_eta(w_t) = prod_d w_d^eta_d (1 - w_d)^(1 - eta_d) for every eta.
Eigen::VectorXd config_weights(const Eigen::VectorXd& w_t);

/// Entropy of the configuration distribution, H(pi(w_t)).
double configuration_entropy(const Eigen::VectorXd& w_t);

/// H(y | theta, w) of the relaxed observation: H(pi(w)) + sum_d w_d H(eps_d).
double relaxed_conditional_entropy(const Eigen::VectorXd& w_t,
                                   const NoiseSpec& noise);

/// log of sum_l mu_l prod_{d in eta} p_d(Y_kd - Y_ld + xi_d), evaluated with
/// log-sum-exp. `atom_obs` is N x n_exp; `eta` is a configuration bitmask.
double predictive_log_likelihood(const Eigen::MatrixXd& atom_obs,
                                 const Eigen::VectorXd& masses, int k,
                                 unsigned eta, const Eigen::VectorXd& xi,
                                 const NoiseSpec& noise);

// ---------------------------------------------------------------------------
// Fisher information

inline constexpr double kFisherRidge = 1e-6;

enum class FisherCriterion { A, D };

/// sum_d w_d H_d^T H_d / sigma_d^2 for the rows H_d of `dhdx_G`
/// (n_exp x n_theta).
Eigen::MatrixXd fim_increment(const Eigen::MatrixXd& dhdx_G,
                              const Eigen::VectorXd& w_t,
                              const NoiseSpec& noise);

/// Accumulated information along the reference trajectory at theta_ref:
/// `rate[c]` is F' on weight cell c (evaluated at the cell midpoint) and
/// `F[s]` the piecewise-linear accumulation at grid node s.
struct FisherAccumulator {
  std::vector<Eigen::MatrixXd> rate;
  std::vector<Eigen::MatrixXd> F;
};

FisherAccumulator fisher_accumulator(const RelaxedDesign& design,
                                     const Eigen::VectorXd& theta_ref,
                                     const ProblemSpec& spec);

/// D: -log det(F(T) + eps I); A: trace((F(T) + eps I)^-1).
ObjectiveEval fisher_objective(const RelaxedDesign& design,
                               const Eigen::VectorXd& theta_nom,
                               const ProblemSpec& spec,
                               FisherCriterion criterion,
                               bool with_gradient = true);

// ---------------------------------------------------------------------------
// EIG surrogates

/// Reference parameter of a tilting factor and its mixture mass.
struct TiltCenter {
  Eigen::VectorXd theta;
  double mass = 1.0;
};

/// The single center at the prior mean.
std::vector<TiltCenter> mean_center(const ParticleCloud& prior);

/// One center per atom of `cloud`, weighted by its mass.
std::vector<TiltCenter> cloud_centers(const ParticleCloud& cloud);

/// Closed-form tilted masses
///   mu_k ∝ m_k sum_j m_j^ref exp(-1/2 (theta_k - theta_j)^T F_j (theta_k -
///   theta_j))
/// computed in the log domain. `fisher[j]` belongs to center j.
Eigen::VectorXd tilt_weights(const ParticleCloud& prior,
                             const std::vector<TiltCenter>& centers,
                             const std::vector<Eigen::MatrixXd>& fisher);

/// Tilted masses at every grid node; mu(0) = m.
struct TiltPath {
  Eigen::MatrixXd mu;  // (S+1) x N
  std::vector<TiltCenter> centers;
  std::vector<FisherAccumulator> fisher;
};

TiltPath tilt_weight_path(const RelaxedDesign& design,
                          const ParticleCloud& prior, const ProblemSpec& spec,
                          const std::vector<TiltCenter>& centers);

/// -J_inst: instantaneous surrogate over the prior cloud. Without
/// `with_gradient` the gradient is left empty and the cheaper plain
/// integrator is used; the value is the same.
ObjectiveEval inst_objective(const RelaxedDesign& design,
                             const ParticleCloud& prior,
                             const ProblemSpec& spec,
                             bool with_gradient = true);

/// -J_tilt: masses on weight cell c are the tilted masses at the start of the
/// cell, i.e. driven by the information gathered on earlier cells.
ObjectiveEval tilt_objective(const RelaxedDesign& design,
                             const ParticleCloud& prior,
                             const ProblemSpec& spec,
                             const std::vector<TiltCenter>& centers,
                             bool with_gradient = true);

}  // namespace oed
