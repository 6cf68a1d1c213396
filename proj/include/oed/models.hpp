#pragma once

#include <memory>
#include <string>
#include <vector>

#include "oed/model.hpp"

namespace oed {

/// Two damped oscillators sharing one control input,
///   q1'' + c1 q1' + theta1 q1 = u,   q2'' + c2 q2' + theta2 q2 = u,
/// state (q1, q2, q1', q2'); sensor d observes q_d.
class HarmonicOscillator final : public ModelBase<HarmonicOscillator> {
 public:
  HarmonicOscillator(double damping_1, double damping_2)
      : damping_{damping_1, damping_2} {}

  std::string name() const override { return "harmonic"; }
  int state_dim() const override { return 4; }
  int param_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  int sensor_count() const override { return 2; }
  std::vector<double> coefficients() const override {
    return {damping_[0], damping_[1]};
  }

  template <class S>
  void eval_dynamics(const S* x, const S* u, const double* theta, double,
                     S* dx) const {
    dx[0] = x[2];
    dx[1] = x[3];
    dx[2] = u[0] - damping_[0] * x[2] - theta[0] * x[0];
    dx[3] = u[0] - damping_[1] * x[3] - theta[1] * x[1];
  }
  template <class S>
  void eval_state_jacobian(const S*, const S*, const double* theta, double,
                           S* jac) const {
    for (int i = 0; i < 16; ++i) jac[i] = S(0.0);
    jac[0 * 4 + 2] = S(1.0);
    jac[1 * 4 + 3] = S(1.0);
    jac[2 * 4 + 0] = S(-theta[0]);
    jac[2 * 4 + 2] = S(-damping_[0]);
    jac[3 * 4 + 1] = S(-theta[1]);
    jac[3 * 4 + 3] = S(-damping_[1]);
  }
  template <class S>
  void eval_param_jacobian(const S* x, const S*, const double*, double,
                           S* jac) const {
    for (int i = 0; i < 8; ++i) jac[i] = S(0.0);
    jac[2 * 2 + 0] = -x[0];
    jac[3 * 2 + 1] = -x[1];
  }
  template <class S>
  S eval_observe(int d, const S* x) const {
    return x[d];
  }
  template <class S>
  void eval_observe_gradient(int d, const S*, S* grad) const {
    for (int i = 0; i < 4; ++i) grad[i] = S(i == d ? 1.0 : 0.0);
  }

 private:
  double damping_[2];
};

/// Controlled predator-prey system
///   x1' =  x1 - theta1 x1 x2 - g1 u x1,
///   x2' = -x2 + theta2 x1 x2 - g2 u x2;
/// sensor d observes x_d.
class LotkaVolterra final : public ModelBase<LotkaVolterra> {
 public:
  LotkaVolterra(double control_gain_1, double control_gain_2)
      : gain_{control_gain_1, control_gain_2} {}

  std::string name() const override { return "lotka_volterra"; }
  int state_dim() const override { return 2; }
  int param_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  int sensor_count() const override { return 2; }
  std::vector<double> coefficients() const override {
    return {gain_[0], gain_[1]};
  }

  template <class S>
  void eval_dynamics(const S* x, const S* u, const double* theta, double,
                     S* dx) const {
    const S x1x2 = x[0] * x[1];
    dx[0] = x[0] - theta[0] * x1x2 - gain_[0] * u[0] * x[0];
    dx[1] = -x[1] + theta[1] * x1x2 - gain_[1] * u[0] * x[1];
  }
  template <class S>
  void eval_state_jacobian(const S* x, const S* u, const double* theta, double,
                           S* jac) const {
    jac[0] = 1.0 - theta[0] * x[1] - gain_[0] * u[0];
    jac[1] = -theta[0] * x[0];
    jac[2] = theta[1] * x[1];
    jac[3] = -1.0 + theta[1] * x[0] - gain_[1] * u[0];
  }
  template <class S>
  void eval_param_jacobian(const S* x, const S*, const double*, double,
                           S* jac) const {
    const S x1x2 = x[0] * x[1];
    jac[0] = -x1x2;
    jac[1] = S(0.0);
    jac[2] = S(0.0);
    jac[3] = x1x2;
  }
  template <class S>
  S eval_observe(int d, const S* x) const {
    return x[d];
  }
  template <class S>
  void eval_observe_gradient(int d, const S*, S* grad) const {
    grad[0] = S(d == 0 ? 1.0 : 0.0);
    grad[1] = S(d == 1 ? 1.0 : 0.0);
  }

 private:
  double gain_[2];
};

/// Pure drift x_i' = theta_i observed directly, h_i = x_i. With x0 = 0 the
/// observation at time t is t * theta, i.e. linear-Gaussian in theta. The
/// single control is inert.
class LinearDrift final : public ModelBase<LinearDrift> {
 public:
  explicit LinearDrift(int dim) : dim_(dim) {}

  std::string name() const override { return "linear_drift"; }
  int state_dim() const override { return dim_; }
  int param_dim() const override { return dim_; }
  int control_dim() const override { return 1; }
  int sensor_count() const override { return dim_; }
  std::vector<double> coefficients() const override {
    return {static_cast<double>(dim_)};
  }

  template <class S>
  void eval_dynamics(const S*, const S*, const double* theta, double,
                     S* dx) const {
    for (int i = 0; i < dim_; ++i) dx[i] = S(theta[i]);
  }
  template <class S>
  void eval_state_jacobian(const S*, const S*, const double*, double,
                           S* jac) const {
    for (int i = 0; i < dim_ * dim_; ++i) jac[i] = S(0.0);
  }
  template <class S>
  void eval_param_jacobian(const S*, const S*, const double*, double,
                           S* jac) const {
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) jac[i * dim_ + j] = S(i == j ? 1.0 : 0.0);
  }
  template <class S>
  S eval_observe(int d, const S* x) const {
    return x[d];
  }
  template <class S>
  void eval_observe_gradient(int d, const S*, S* grad) const {
    for (int i = 0; i < dim_; ++i) grad[i] = S(i == d ? 1.0 : 0.0);
  }

 private:
  int dim_;
};

/// Builds a built-in model family by name ("harmonic", "lotka_volterra",
/// "linear_drift") from its coefficient list.
ModelPtr make_model(const std::string& name,
                    const std::vector<double>& coefficients);

}  // namespace oed
