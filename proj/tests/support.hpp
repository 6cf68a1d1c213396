#pragma once

#include <memory>

#include <oed/dynamics.hpp>
#include <oed/model.hpp>
#include <oed/models.hpp>

namespace oedtest {

// x' = theta x + b u, h = x
class ScalarLinear final : public oed::ModelBase<ScalarLinear> {
 public:
  explicit ScalarLinear(double b = 0.0) : b_(b) {}
  std::string name() const override { return "scalar_linear"; }
  int state_dim() const override { return 1; }
  int param_dim() const override { return 1; }
  int control_dim() const override { return 1; }
  int sensor_count() const override { return 1; }
  std::vector<double> coefficients() const override { return {b_}; }

  template <class S>
  void eval_dynamics(const S* x, const S* u, const double* th, double, S* dx) const {
    dx[0] = th[0] * x[0] + b_ * u[0];
  }
  template <class S>
  void eval_state_jacobian(const S*, const S*, const double* th, double, S* j) const {
    j[0] = S(th[0]);
  }
  template <class S>
  void eval_param_jacobian(const S* x, const S*, const double*, double, S* j) const {
    j[0] = x[0];
  }
  template <class S>
  S eval_observe(int, const S* x) const { return x[0]; }
  template <class S>
  void eval_observe_gradient(int, const S*, S* g) const { g[0] = S(1.0); }

 private:
  double b_;
};

// x' = theta, h_0 = x_0 + x_1, h_1 = x_0 - 2 x_1 (affine in theta)
class MixedDrift final : public oed::ModelBase<MixedDrift> {
 public:
  std::string name() const override { return "mixed_drift"; }
  int state_dim() const override { return 2; }
  int param_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  int sensor_count() const override { return 2; }
  std::vector<double> coefficients() const override { return {}; }

  template <class S>
  void eval_dynamics(const S*, const S*, const double* th, double, S* dx) const {
    dx[0] = S(th[0]);
    dx[1] = S(th[1]);
  }
  template <class S>
  void eval_state_jacobian(const S*, const S*, const double*, double, S* j) const {
    for (int i = 0; i < 4; ++i) j[i] = S(0.0);
  }
  template <class S>
  void eval_param_jacobian(const S*, const S*, const double*, double, S* j) const {
    j[0] = S(1.0);
    j[1] = S(0.0);
    j[2] = S(0.0);
    j[3] = S(1.0);
  }
  template <class S>
  S eval_observe(int d, const S* x) const {
    if (d == 0) return x[0] + x[1];
    return x[0] - 2.0 * x[1];
  }
  template <class S>
  void eval_observe_gradient(int d, const S*, S* g) const {
    g[0] = S(1.0);
    g[1] = S(d == 0 ? 1.0 : -2.0);
  }
};

inline oed::ProblemSpec scalar_spec(oed::ModelPtr model, double T, int cells,
                                    int spc, double x0 = 1.0) {
  oed::ProblemSpec spec;
  spec.model = std::move(model);
  spec.horizon = T;
  spec.x0 = Eigen::VectorXd::Constant(spec.model->state_dim(), x0);
  spec.control_lower = Eigen::VectorXd::Constant(spec.model->control_dim(), 0.0);
  spec.control_upper = Eigen::VectorXd::Constant(spec.model->control_dim(), 1.0);
  spec.control_intervals = 1;
  spec.weight_cells = cells;
  spec.steps_per_cell = spc;
  spec.noise.sigma.assign(spec.model->sensor_count(), 1.0);
  spec.noise.order.assign(spec.model->sensor_count(), 5);
  spec.budget = 1;
  return spec;
}

}  // namespace oedtest
