#include "oed/dynamics.hpp"

#include <span>

#include "oed/error.hpp"
#include "oed/models.hpp"
#include "rk4.hpp"

namespace oed {
namespace {

std::vector<double> flatten_controls(const ProblemSpec& spec,
                                     const ControlSchedule& u) {
  if (u.rows() != spec.control_intervals || u.cols() != spec.control_dim())
    throw ArgumentError("control schedule has the wrong shape");
  std::vector<double> flat(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < u.cols(); ++j)
      flat[i * u.cols() + j] = u(i, j);
  return flat;
}

void check_theta(const ProblemSpec& spec, const Eigen::VectorXd& theta) {
  if (theta.size() != spec.param_dim())
    throw ArgumentError("parameter vector has the wrong length");
  if (!theta.allFinite()) throw ArgumentError("parameter vector is not finite");
}

int resolve_last(const TimeGrid& grid, int last_node) {
  if (last_node < 0 || last_node > grid.steps()) return grid.steps();
  return last_node;
}

}  // namespace

Trajectory integrate(const ProblemSpec& spec, const ControlSchedule& u,
                     const Eigen::VectorXd& theta, const TimeGrid& grid,
                     int last_node) {
  check_theta(spec, theta);
  const Model& model = *spec.model;
  const int nx = model.state_dim();
  const int nu = model.control_dim();
  const std::vector<double> controls = flatten_controls(spec, u);
  const int last = resolve_last(grid, last_node);

  Trajectory traj;
  traj.states.setZero(last + 1, nx);
  std::vector<double> y(spec.x0.data(), spec.x0.data() + nx);
  const std::span<const double> th(theta.data(), theta.size());

  detail::rk4_run(
      y, grid, last,
      [&](int s, double t, const std::vector<double>& state,
          std::vector<double>& dy) {
        const double* uc = controls.data() + grid.interval_of_step(s) * nu;
        model.dynamics(std::span<const double>(state.data(), nx),
                       std::span<const double>(uc, nu), th, t,
                       std::span<double>(dy.data(), nx));
      },
      [&](int node, const std::vector<double>& state) {
        for (int i = 0; i < nx; ++i) traj.states(node, i) = state[i];
      });
  return traj;
}

std::pair<Trajectory, SensitivityPath> integrate_with_sensitivity(
    const ProblemSpec& spec, const ControlSchedule& u,
    const Eigen::VectorXd& theta, const TimeGrid& grid, int last_node) {
  check_theta(spec, theta);
  const Model& model = *spec.model;
  const int nx = model.state_dim();
  const int np = model.param_dim();
  const int nu = model.control_dim();
  const std::vector<double> controls = flatten_controls(spec, u);
  const int last = resolve_last(grid, last_node);

  Trajectory traj;
  traj.states.setZero(last + 1, nx);
  SensitivityPath sens;
  sens.G.assign(last + 1, Eigen::MatrixXd::Zero(nx, np));

  std::vector<double> y(static_cast<std::size_t>(nx * (1 + np)), 0.0);
  for (int i = 0; i < nx; ++i) y[i] = spec.x0[i];
  std::vector<double> fx(nx * nx), fp(nx * np);
  const std::span<const double> th(theta.data(), theta.size());

  detail::rk4_run(
      y, grid, last,
      [&](int s, double t, const std::vector<double>& state,
          std::vector<double>& dy) {
        const std::span<const double> x(state.data(), nx);
        const std::span<const double> uc(
            controls.data() + grid.interval_of_step(s) * nu, nu);
        model.dynamics(x, uc, th, t, std::span<double>(dy.data(), nx));
        model.state_jacobian(x, uc, th, t, fx);
        model.param_jacobian(x, uc, th, t, fp);
        const double* G = state.data() + nx;
        double* dG = dy.data() + nx;
        for (int i = 0; i < nx; ++i) {
          for (int j = 0; j < np; ++j) {
            double acc = fp[i * np + j];
            for (int k = 0; k < nx; ++k) acc += fx[i * nx + k] * G[k * np + j];
            dG[i * np + j] = acc;
          }
        }
      },
      [&](int node, const std::vector<double>& state) {
        for (int i = 0; i < nx; ++i) {
          traj.states(node, i) = state[i];
          for (int j = 0; j < np; ++j)
            sens.G[node](i, j) = state[nx + i * np + j];
        }
      });
  return {std::move(traj), std::move(sens)};
}

std::vector<ADScalar> seeded_controls(const ProblemSpec& spec,
                                      const ControlSchedule& u) {
  const std::vector<double> flat = flatten_controls(spec, u);
  const int n = static_cast<int>(flat.size());
  if (n > kMaxControlDirections)
    throw ConfigurationError("too many control decision variables");
  std::vector<ADScalar> out(flat.size());
  for (int i = 0; i < n; ++i)
    out[i] = ADScalar(flat[i], Tangent::Unit(n, i));
  return out;
}

std::vector<ADScalar> midpoint_states_ad(const ProblemSpec& spec,
                                         const std::vector<ADScalar>& u,
                                         const Eigen::VectorXd& theta,
                                         const TimeGrid& grid) {
  check_theta(spec, theta);
  const Model& model = *spec.model;
  const int nx = model.state_dim();
  const int nu = model.control_dim();
  const int dirs = static_cast<int>(u.size());
  std::vector<ADScalar> y(nx);
  for (int i = 0; i < nx; ++i) y[i] = ADScalar(spec.x0[i], Tangent::Zero(dirs));
  std::vector<ADScalar> out(static_cast<std::size_t>(grid.cells() * nx));
  const std::span<const double> th(theta.data(), theta.size());
  const int spc = grid.steps_per_cell();

  detail::rk4_run(
      y, grid, grid.steps(),
      [&](int s, double t, const std::vector<ADScalar>& state,
          std::vector<ADScalar>& dy) {
        const ADScalar* uc = u.data() + grid.interval_of_step(s) * nu;
        model.dynamics(std::span<const ADScalar>(state.data(), nx),
                       std::span<const ADScalar>(uc, nu), th, t,
                       std::span<ADScalar>(dy.data(), nx));
      },
      [&](int node, const std::vector<ADScalar>& state) {
        if (node % spc != spc / 2) return;
        const int c = node / spc;
        for (int i = 0; i < nx; ++i) out[c * nx + i] = state[i];
      });
  return out;
}

MidpointSensitivities midpoint_sensitivities_ad(const ProblemSpec& spec,
                                                const std::vector<ADScalar>& u,
                                                const Eigen::VectorXd& theta,
                                                const TimeGrid& grid) {
  check_theta(spec, theta);
  const Model& model = *spec.model;
  const int nx = model.state_dim();
  const int np = model.param_dim();
  const int nu = model.control_dim();
  const int dirs = static_cast<int>(u.size());
  const Tangent zero = Tangent::Zero(dirs);

  std::vector<ADScalar> y(static_cast<std::size_t>(nx * (1 + np)));
  for (int i = 0; i < nx; ++i) y[i] = ADScalar(spec.x0[i], zero);
  for (int i = nx; i < nx * (1 + np); ++i) y[i] = ADScalar(0.0, zero);
  std::vector<ADScalar> fx(nx * nx), fp(nx * np);
  const std::span<const double> th(theta.data(), theta.size());
  const int spc = grid.steps_per_cell();

  MidpointSensitivities out;
  out.states.resize(static_cast<std::size_t>(grid.cells() * nx));
  out.sensitivities.resize(static_cast<std::size_t>(grid.cells() * nx * np));

  detail::rk4_run(
      y, grid, grid.steps(),
      [&](int s, double t, const std::vector<ADScalar>& state,
          std::vector<ADScalar>& dy) {
        const std::span<const ADScalar> x(state.data(), nx);
        const std::span<const ADScalar> uc(
            u.data() + grid.interval_of_step(s) * nu, nu);
        model.dynamics(x, uc, th, t, std::span<ADScalar>(dy.data(), nx));
        model.state_jacobian(x, uc, th, t, fx);
        model.param_jacobian(x, uc, th, t, fp);
        const ADScalar* G = state.data() + nx;
        ADScalar* dG = dy.data() + nx;
        for (int i = 0; i < nx; ++i) {
          for (int j = 0; j < np; ++j) {
            ADScalar acc = fp[i * np + j];
            for (int k = 0; k < nx; ++k) {
              if (fx[i * nx + k].value() == 0.0 &&
                  fx[i * nx + k].derivatives().isZero(0.0))
                continue;
              acc += fx[i * nx + k] * G[k * np + j];
            }
            dG[i * np + j] = acc;
          }
        }
      },
      [&](int node, const std::vector<ADScalar>& state) {
        if (node % spc != spc / 2) return;
        const int c = node / spc;
        for (int i = 0; i < nx; ++i) out.states[c * nx + i] = state[i];
        for (int i = 0; i < nx * np; ++i)
          out.sensitivities[c * nx * np + i] = state[nx + i];
      });
  return out;
}

}  // namespace oed
