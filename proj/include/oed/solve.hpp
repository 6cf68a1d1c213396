#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oed/criteria.hpp"

namespace oed {

enum class Criterion { AOpt, DOpt, Inst, Tilt, MultiTilt };

/// "a_opt", "d_opt", "inst", "tilt", "multi_tilt".
std::string criterion_name(Criterion c);
/// Inverse of criterion_name; throws ArgumentError for unknown names.
Criterion parse_criterion(const std::string& name);
const std::vector<Criterion>& all_criteria();

/// Everything an objective needs besides the decision vector.
struct DesignProblem {
  ProblemSpec spec;
  ParticleCloud prior;      // design cloud
  ParticleCloud centers;    // reference points of the multi-center tilt
  Eigen::VectorXd nominal;  // Fisher linearization point (prior mean)
};

DesignProblem make_design_problem(const ProblemSetup& setup);

/// Objective of `criterion` at decision vector z (projected first).
ObjectiveEval objective_and_gradient(const DesignProblem& problem,
                                     Criterion criterion,
                                     const Eigen::VectorXd& z,
                                     bool with_gradient = true);

/// Per-entry bounds on the flattened weights (cell-major), used to pin or
/// exclude candidates during iterative rounding.
struct WeightBounds {
  Eigen::VectorXd lo, hi;
};

/// Euclidean projection onto {u in box} x {0 <= w <= 1, sum w <= K}, with
/// the weight box replaced by `bounds` when given.
Eigen::VectorXd project_feasible(const Eigen::VectorXd& z,
                                 const ProblemSpec& spec,
                                 const WeightBounds* bounds = nullptr);

/// Projection of w onto {lo <= w <= hi, sum w <= budget} by bisection on the
/// shift of the budget multiplier.
Eigen::VectorXd project_capped(const Eigen::VectorXd& w, double budget,
                               double lo = 0.0, double hi = 1.0);
Eigen::VectorXd project_capped(const Eigen::VectorXd& w, double budget,
                               const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi);

struct OptimizerOptions {
  int max_iters = 500;
  double rel_tol = 1e-6;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  int restarts = 5;
  std::uint64_t seed = 0;
};

/// Progress of one projected-gradient run.
struct OptimizationTrace {
  std::vector<double> values;  // accepted objective values, starting at z0
  int iterations = 0;
  double projected_gradient_norm = 0.0;
  bool converged = false;
  std::string failure;  // non-empty if the start diverged
};

struct ProjectedGradientResult {
  Eigen::VectorXd z;
  double value = 0.0;
  OptimizationTrace trace;
};

using ObjectiveFunction =
    std::function<ObjectiveEval(const Eigen::VectorXd& z, bool with_gradient)>;
using Projection = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Projected gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking along the projection arc. Accepted values never increase.
ProjectedGradientResult projected_gradient(const ObjectiveFunction& f,
                                           const Projection& project,
                                           const Eigen::VectorXd& z0,
                                           const OptimizerOptions& opts);

struct OptimizeResult {
  RelaxedDesign design;
  double value = 0.0;
  int best_restart = 0;
  std::vector<OptimizationTrace> restarts;
};

/// Multi-start projected gradient; start 0 has u at the box midpoint, later
/// starts add uniform perturbations drawn from a stream seeded by (seed,
/// restart). All starts use w = K / (N_w n_exp). The best final iterate by
/// (value, restart index) is returned.
OptimizeResult optimize(const DesignProblem& problem, Criterion criterion,
                        const OptimizerOptions& opts,
                        const WeightBounds* bounds = nullptr);

// ---------------------------------------------------------------------------
// Discrete designs

struct Activation {
  double time = 0.0;
  int sensor = 0;  // zero-based
  int cell = 0;

  bool operator==(const Activation&) const = default;
};

struct DiscreteDesign {
  Eigen::MatrixXd u;
  std::vector<Activation> activations;  // sorted by (time, sensor)

  int count(int sensor) const;
};

/// Greedy rounding: candidates (cell midpoint, sensor) with positive weight,
/// in order of decreasing weight (ties: earlier time, lower sensor). A
/// candidate is taken if its time coincides with a selected time or is at
/// least min_separation away from all of them, until K are selected.
DiscreteDesign round_design(const RelaxedDesign& relaxed,
                            const ProblemSpec& spec);

/// Checks budget, separation, midpoint times, sensor range and control
/// bounds; the reason for a violation goes to `why`.
bool is_feasible(const DiscreteDesign& design, const ProblemSpec& spec,
                 std::string* why = nullptr);

struct RoundedDesign {
  OptimizeResult relaxed;  // last relaxed solve
  DiscreteDesign design;
  int solves = 0;
};

/// Optimize and round. When separation leaves the rounded design short of K
/// activations, the selected ones are pinned at weight 1, cells too close to
/// them are excluded, and the relaxed problem is solved again; repeats until
/// K are placed or no further activation is gained. Every returned
/// activation has positive weight in the returned relaxed design.
RoundedDesign design_and_round(const DesignProblem& problem,
                               Criterion criterion,
                               const OptimizerOptions& opts);

/// Binary relaxed weights of a discrete design.
RelaxedDesign to_relaxed(const DiscreteDesign& design, const ProblemSpec& spec);

}  // namespace oed
