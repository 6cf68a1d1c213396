#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "oed/autodiff.hpp"
#include "oed/problem.hpp"

namespace oed {

/// Piecewise-constant control values, one row per control interval
/// (N_u x n_u).
using ControlSchedule = Eigen::MatrixXd;

/// States on the grid nodes, (S+1) x n_x.
struct Trajectory {
  Eigen::MatrixXd states;
};

/// Parameter sensitivities G(t_s) = dx/dtheta on the grid nodes.
struct SensitivityPath {
  std::vector<Eigen::MatrixXd> G;  // S+1 entries, each n_x x n_theta
};

/// Classical RK4 on the grid. Throws IntegrationError on a non-finite state.
/// `last_node` < 0 integrates to T.
Trajectory integrate(const ProblemSpec& spec, const ControlSchedule& u,
                     const Eigen::VectorXd& theta, const TimeGrid& grid,
                     int last_node = -1);

/// Co-integrates x and G' = f_x G + f_theta with the same RK4 steps; the
/// state part is bit-identical to integrate().
std::pair<Trajectory, SensitivityPath> integrate_with_sensitivity(
    const ProblemSpec& spec, const ControlSchedule& u,
    const Eigen::VectorXd& theta, const TimeGrid& grid, int last_node = -1);

/// Control values as forward-mode scalars seeded with unit tangents, in the
/// decision layout (interval-major). Tangent length = spec.control_vars().
std::vector<ADScalar> seeded_controls(const ProblemSpec& spec,
                                      const ControlSchedule& u);

/// States at every weight-cell midpoint, differentiated with respect to the
/// seeded controls. Result is N_w * n_x, cell-major.
std::vector<ADScalar> midpoint_states_ad(const ProblemSpec& spec,
                                         const std::vector<ADScalar>& u,
                                         const Eigen::VectorXd& theta,
                                         const TimeGrid& grid);

/// States and parameter sensitivities at every weight-cell midpoint,
/// differentiated with respect to the seeded controls. `states` is N_w * n_x,
/// `sensitivities` is N_w * n_x * n_theta (row-major per cell).
struct MidpointSensitivities {
  std::vector<ADScalar> states;
  std::vector<ADScalar> sensitivities;
};
MidpointSensitivities midpoint_sensitivities_ad(const ProblemSpec& spec,
                                                const std::vector<ADScalar>& u,
                                                const Eigen::VectorXd& theta,
                                                const TimeGrid& grid);

/// Prior description plus the quadrature orders used for the design cloud
/// and for the multi-center reference points.
struct PriorSetup {
  PriorSpec prior;
  std::vector<int> orders;
  std::vector<int> center_orders;
};

struct ProblemSetup {
  ProblemSpec problem;
  PriorSetup prior;
};

/// Benchmark problems: "harmonic" with scenarios "similar" / "uneven", and
/// "lotka_volterra" with scenarios "lognormal" / "mixture".
ProblemSpec benchmark_model(const std::string& name,
                            const std::string& scenario);
ProblemSetup benchmark_setup(const std::string& name,
                             const std::string& scenario);

}  // namespace oed
