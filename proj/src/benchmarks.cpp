#include <cmath>
#include <random>

#include "oed/dynamics.hpp"
#include "oed/error.hpp"
#include "oed/models.hpp"

namespace oed {
namespace {

// Analytic Jacobians are checked against finite differences once per build.
void self_check(const ProblemSpec& spec, double theta_lo, double theta_hi) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Model& m = *spec.model;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> x(m.state_dim()), u(m.control_dim()), th(m.param_dim());
    for (double& v : x) v = 0.1 + 2.0 * unit(rng);
    for (double& v : u) v = unit(rng);
    for (double& v : th) v = theta_lo + (theta_hi - theta_lo) * unit(rng);
    if (jacobian_check(m, x, u, th, 0.0) > 1e-5)
      throw ConfigurationError("analytic Jacobians of '" + m.name() +
                               "' disagree with finite differences");
  }
}

ProblemSpec harmonic(const std::string& scenario) {
  ProblemSpec spec;
  spec.model = make_model("harmonic", {0.4, 0.8});
  spec.horizon = 10.0;
  spec.x0 = Eigen::Vector4d(1.0, 1.0, 0.0, 0.0);
  spec.control_lower = Eigen::VectorXd::Constant(1, 0.0);
  spec.control_upper = Eigen::VectorXd::Constant(1, 1.0);
  spec.control_intervals = 12;
  spec.weight_cells = 120;
  spec.steps_per_cell = 10;
  spec.budget = 8;
  spec.min_separation = 0.1;
  if (scenario == "similar")
    spec.noise.sigma = {0.03, 0.025};
  else if (scenario == "uneven")
    spec.noise.sigma = {0.03, 0.03};
  else
    throw ConfigurationError("unknown harmonic scenario '" + scenario + "'");
  spec.noise.order = {5, 5};
  validate(spec);
  self_check(spec, 5.0, 10.0);
  return spec;
}

ProblemSpec lotka_volterra(const std::string& scenario) {
  if (scenario != "lognormal" && scenario != "mixture")
    throw ConfigurationError("unknown lotka_volterra scenario '" + scenario +
                             "'");
  ProblemSpec spec;
  spec.model = make_model("lotka_volterra", {0.4, 0.2});
  spec.horizon = 12.0;
  spec.x0 = Eigen::Vector2d(0.5, 0.7);
  spec.control_lower = Eigen::VectorXd::Constant(1, 0.0);
  spec.control_upper = Eigen::VectorXd::Constant(1, 1.0);
  spec.control_intervals = 12;
  spec.weight_cells = 96;
  spec.steps_per_cell = 10;
  spec.budget = 10;
  spec.min_separation = 0.25;
  spec.noise.sigma = {std::sqrt(0.2), std::sqrt(0.2)};
  spec.noise.order = {6, 6};
  validate(spec);
  self_check(spec, 1.0, 12.0);
  return spec;
}

LogNormalPrior isotropic_lognormal(double center, double variance) {
  LogNormalPrior p;
  p.log_mean = Eigen::VectorXd::Constant(2, std::log(center));
  p.log_cov = variance * Eigen::MatrixXd::Identity(2, 2);
  return p;
}

}  // namespace

ProblemSpec benchmark_model(const std::string& name,
                            const std::string& scenario) {
  if (name == "harmonic") return harmonic(scenario);
  if (name == "lotka_volterra") return lotka_volterra(scenario);
  throw ConfigurationError("unknown benchmark '" + name + "'");
}

ProblemSetup benchmark_setup(const std::string& name,
                             const std::string& scenario) {
  ProblemSetup setup;
  setup.problem = benchmark_model(name, scenario);
  if (name == "harmonic") {
    UniformBoxPrior box;
    box.lower = Eigen::Vector2d(5.0, 5.0);
    box.upper = Eigen::Vector2d(10.0, 10.0);
    setup.prior.prior = box;
    setup.prior.orders = {8, 8};
    setup.prior.center_orders = {2, 2};
  } else if (scenario == "lognormal") {
    setup.prior.prior = isotropic_lognormal(2.0, 0.2);
    setup.prior.orders = {6, 6};
    setup.prior.center_orders = {2, 2};
  } else {
    LogNormalMixturePrior mix;
    mix.weights = {0.5, 0.5};
    mix.components = {isotropic_lognormal(2.0, 0.2),
                      isotropic_lognormal(10.0, 0.05)};
    setup.prior.prior = mix;
    setup.prior.orders = {4, 4};
    setup.prior.center_orders = {2, 2};
  }
  return setup;
}

}  // namespace oed
