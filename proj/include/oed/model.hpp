#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "oed/autodiff.hpp"

namespace oed {

/// A controlled ODE  x' = f(x, u, theta, t)  with scalar observation maps
/// h_d(x), d = 0..n_exp-1.
///
/// Every callback exists for plain doubles and for ADScalar states and
/// controls; theta is never differentiated through this interface (parameter
/// sensitivities use the analytic Jacobians). Matrices are row-major.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int param_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int sensor_count() const = 0;

  /// Model-specific constants (dampings, gains, ...), used for equality and
  /// serialization.
  virtual std::vector<double> coefficients() const = 0;

  virtual void dynamics(std::span<const double> x, std::span<const double> u,
                        std::span<const double> theta, double t,
                        std::span<double> dx) const = 0;
  virtual void dynamics(std::span<const ADScalar> x,
                        std::span<const ADScalar> u,
                        std::span<const double> theta, double t,
                        std::span<ADScalar> dx) const = 0;

  /// df/dx, n_x by n_x.
  virtual void state_jacobian(std::span<const double> x,
                              std::span<const double> u,
                              std::span<const double> theta, double t,
                              std::span<double> jac) const = 0;
  virtual void state_jacobian(std::span<const ADScalar> x,
                              std::span<const ADScalar> u,
                              std::span<const double> theta, double t,
                              std::span<ADScalar> jac) const = 0;

  /// df/dtheta, n_x by n_theta.
  virtual void param_jacobian(std::span<const double> x,
                              std::span<const double> u,
                              std::span<const double> theta, double t,
                              std::span<double> jac) const = 0;
  virtual void param_jacobian(std::span<const ADScalar> x,
                              std::span<const ADScalar> u,
                              std::span<const double> theta, double t,
                              std::span<ADScalar> jac) const = 0;

  virtual double observe(int sensor, std::span<const double> x) const = 0;
  virtual ADScalar observe(int sensor, std::span<const ADScalar> x) const = 0;

  /// dh_d/dx, length n_x.
  virtual void observe_gradient(int sensor, std::span<const double> x,
                                std::span<double> grad) const = 0;
  virtual void observe_gradient(int sensor, std::span<const ADScalar> x,
                                std::span<ADScalar> grad) const = 0;
};

using ModelPtr = std::shared_ptr<const Model>;

/// Implements the double/ADScalar virtual pairs of Model by forwarding to
/// templated members of Derived:
///
///   template <class S> void eval_dynamics(const S* x, const S* u,
///                                         const double* theta, double t,
///                                         S* dx) const;
///   template <class S> void eval_state_jacobian(..., S* jac) const;
///   template <class S> void eval_param_jacobian(..., S* jac) const;
///   template <class S> S eval_observe(int d, const S* x) const;
///   template <class S> void eval_observe_gradient(int d, const S* x,
///                                                 S* grad) const;
template <class Derived>
class ModelBase : public Model {
 public:
  void dynamics(std::span<const double> x, std::span<const double> u,
                std::span<const double> theta, double t,
                std::span<double> dx) const override {
    self().eval_dynamics(x.data(), u.data(), theta.data(), t, dx.data());
  }
  void dynamics(std::span<const ADScalar> x, std::span<const ADScalar> u,
                std::span<const double> theta, double t,
                std::span<ADScalar> dx) const override {
    self().eval_dynamics(x.data(), u.data(), theta.data(), t, dx.data());
  }
  void state_jacobian(std::span<const double> x, std::span<const double> u,
                      std::span<const double> theta, double t,
                      std::span<double> jac) const override {
    self().eval_state_jacobian(x.data(), u.data(), theta.data(), t,
                               jac.data());
  }
  void state_jacobian(std::span<const ADScalar> x, std::span<const ADScalar> u,
                      std::span<const double> theta, double t,
                      std::span<ADScalar> jac) const override {
    self().eval_state_jacobian(x.data(), u.data(), theta.data(), t,
                               jac.data());
  }
  void param_jacobian(std::span<const double> x, std::span<const double> u,
                      std::span<const double> theta, double t,
                      std::span<double> jac) const override {
    self().eval_param_jacobian(x.data(), u.data(), theta.data(), t,
                               jac.data());
  }
  void param_jacobian(std::span<const ADScalar> x, std::span<const ADScalar> u,
                      std::span<const double> theta, double t,
                      std::span<ADScalar> jac) const override {
    self().eval_param_jacobian(x.data(), u.data(), theta.data(), t,
                               jac.data());
  }
  double observe(int sensor, std::span<const double> x) const override {
    return self().eval_observe(sensor, x.data());
  }
  ADScalar observe(int sensor, std::span<const ADScalar> x) const override {
    return self().eval_observe(sensor, x.data());
  }
  void observe_gradient(int sensor, std::span<const double> x,
                        std::span<double> grad) const override {
    self().eval_observe_gradient(sensor, x.data(), grad.data());
  }
  void observe_gradient(int sensor, std::span<const ADScalar> x,
                        std::span<ADScalar> grad) const override {
    self().eval_observe_gradient(sensor, x.data(), grad.data());
  }

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// Largest relative discrepancy between the analytic Jacobians of `model`
/// and central finite differences (step 1e-6 * (1 + |v|)) at the given point.
double jacobian_check(const Model& model, std::span<const double> x,
                      std::span<const double> u, std::span<const double> theta,
                      double t);

}  // namespace oed
