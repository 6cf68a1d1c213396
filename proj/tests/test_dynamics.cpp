#include <doctest.h>

#include <cmath>

#include <oed/dynamics.hpp>
#include <oed/error.hpp>

#include "support.hpp"

using namespace oed;
using oedtest::ScalarLinear;
using oedtest::scalar_spec;

TEST_CASE("exponential decay at step 0.01") {
  auto spec = scalar_spec(std::make_shared<ScalarLinear>(), 1.0, 10, 10);
  TimeGrid grid(spec);
  CHECK(grid.step() == doctest::Approx(0.01));
  Eigen::VectorXd theta(1);
  theta << -1.0;
  Trajectory tr = integrate(spec, Eigen::MatrixXd::Zero(1, 1), theta, grid);
  CHECK(std::abs(tr.states(grid.steps(), 0) - 0.367879) < 1e-6);
}

TEST_CASE("rk4 error ratio under step halving") {
  Eigen::VectorXd theta(1);
  theta << -1.0;
  auto err = [&](int spc) {
    auto spec = scalar_spec(std::make_shared<ScalarLinear>(), 1.0, 1, spc);
    TimeGrid grid(spec);
    Trajectory tr = integrate(spec, Eigen::MatrixXd::Zero(1, 1), theta, grid);
    return std::abs(tr.states(grid.steps(), 0) - std::exp(-1.0));
  };
  double ratio = err(4) / err(8);
  CHECK(ratio >= 14.0);
  CHECK(ratio <= 18.0);
}

TEST_CASE("sensitivity of linear growth") {
  auto spec = scalar_spec(std::make_shared<ScalarLinear>(), 1.0, 10, 10);
  TimeGrid grid(spec);
  Eigen::VectorXd theta(1);
  theta << 0.5;
  auto [tr, sens] = integrate_with_sensitivity(spec, Eigen::MatrixXd::Zero(1, 1),
                                               theta, grid);
  CHECK(std::abs(sens.G.back()(0, 0) - std::exp(0.5)) < 1e-5);
  Trajectory plain = integrate(spec, Eigen::MatrixXd::Zero(1, 1), theta, grid);
  CHECK((plain.states.array() == tr.states.array()).all());
}

TEST_CASE("theta-free dynamics give zero sensitivity") {
  // x stays at 0, so f_theta = x vanishes along the path
  auto spec = scalar_spec(std::make_shared<ScalarLinear>(), 1.0, 4, 4, 0.0);
  TimeGrid grid(spec);
  Eigen::VectorXd theta(1);
  theta << 0.7;
  auto [tr, sens] = integrate_with_sensitivity(spec, Eigen::MatrixXd::Zero(1, 1),
                                               theta, grid);
  for (const auto& G : sens.G) CHECK(G(0, 0) == 0.0);
}

TEST_CASE("lotka-volterra first integral") {
  ProblemSpec spec = benchmark_model("lotka_volterra", "lognormal");
  spec.weight_cells = 240;  // step 0.005
  spec.steps_per_cell = 10;
  TimeGrid grid(spec);
  CHECK(grid.step() == doctest::Approx(0.005));
  Eigen::Vector2d theta(1.0, 1.0);
  Trajectory tr = integrate(spec, Eigen::MatrixXd::Zero(12, 1), theta, grid);
  auto V = [&](int s) {
    double x1 = tr.states(s, 0), x2 = tr.states(s, 1);
    return theta(1) * x1 - std::log(x1) + theta(0) * x2 - std::log(x2);
  };
  double v0 = V(0), worst = 0.0;
  for (int s = 0; s <= grid.steps(); ++s) worst = std::max(worst, std::abs(V(s) - v0));
  CHECK(worst < 1e-5);
}

TEST_CASE("damped oscillator energy decays") {
  ProblemSpec spec = benchmark_model("harmonic", "similar");
  TimeGrid grid(spec);
  Eigen::Vector2d theta(7.0, 6.0);
  Trajectory tr = integrate(spec, Eigen::MatrixXd::Zero(12, 1), theta, grid);
  double prev = 1e300;
  for (int s = 0; s <= grid.steps(); ++s) {
    double q = tr.states(s, 0), v = tr.states(s, 2);
    double e = 0.5 * (v * v + theta(0) * q * q);
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
}

TEST_CASE("sensitivities match finite differences on the benchmarks") {
  struct Case {
    const char* name;
    const char* scenario;
    Eigen::Vector2d theta;
    double u;
  };
  for (const Case& c : {Case{"lotka_volterra", "lognormal", {2.0, 2.0}, 0.5},
                        Case{"harmonic", "similar", {6.5, 8.0}, 0.3}}) {
    ProblemSpec spec = benchmark_model(c.name, c.scenario);
    TimeGrid grid(spec);
    Eigen::MatrixXd u = Eigen::MatrixXd::Constant(12, 1, c.u);
    auto [tr, sens] = integrate_with_sensitivity(spec, u, c.theta, grid);
    const Eigen::MatrixXd& G = sens.G.back();
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d tp = c.theta, tm = c.theta;
      tp(j) += 1e-5;
      tm(j) -= 1e-5;
      Eigen::VectorXd fd = (integrate(spec, u, tp, grid).states.bottomRows(1) -
                            integrate(spec, u, tm, grid).states.bottomRows(1))
                               .transpose() /
                           2e-5;
      CHECK((fd - G.col(j)).norm() <= 1e-4 * fd.norm());
    }
  }
}

TEST_CASE("benchmark parameters") {
  ProblemSpec h = benchmark_model("harmonic", "uneven");
  CHECK(h.noise.sigma == std::vector<double>{0.03, 0.03});
  CHECK(h.budget == 8);
  ProblemSpec s = benchmark_model("harmonic", "similar");
  CHECK(s.noise.sigma == std::vector<double>{0.03, 0.025});
  ProblemSpec lv = benchmark_model("lotka_volterra", "lognormal");
  CHECK(lv.horizon == 12.0);
  CHECK(lv.noise.variance(0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(lv.noise.variance(1) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(benchmark_model("harmonic", "other"), ConfigurationError);
}

TEST_CASE("determinism and degenerate horizon") {
  ProblemSpec spec = benchmark_model("harmonic", "similar");
  TimeGrid grid(spec);
  Eigen::MatrixXd u = Eigen::MatrixXd::Constant(12, 1, 0.4);
  Eigen::Vector2d theta(5.5, 9.0);
  auto a = integrate_with_sensitivity(spec, u, theta, grid);
  auto b = integrate_with_sensitivity(spec, u, theta, grid);
  CHECK((a.first.states.array() == b.first.states.array()).all());
  CHECK((a.second.G.back().array() == b.second.G.back().array()).all());
  spec.horizon = 0.0;
  CHECK_THROWS_AS(validate(spec), ConfigurationError);
}

TEST_CASE("blow-up reports the failure time") {
  auto spec = scalar_spec(std::make_shared<ScalarLinear>(), 10.0, 10, 10);
  TimeGrid grid(spec);
  Eigen::VectorXd theta(1);
  theta << 400.0;
  try {
    integrate(spec, Eigen::MatrixXd::Zero(1, 1), theta, grid);
    FAIL("expected an integration error");
  } catch (const IntegrationError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() < 10.0);
  }
}

TEST_CASE("midpoint AD states agree with the plain integrator") {
  ProblemSpec spec = benchmark_model("lotka_volterra", "mixture");
  TimeGrid grid(spec);
  Eigen::MatrixXd u(12, 1);
  for (int i = 0; i < 12; ++i) u(i, 0) = 0.05 + 0.07 * i;
  Eigen::Vector2d theta(3.0, 1.5);
  auto xs = midpoint_states_ad(spec, seeded_controls(spec, u), theta, grid);
  Trajectory tr = integrate(spec, u, theta, grid);
  for (int c = 0; c < spec.weight_cells; ++c)
    for (int i = 0; i < 2; ++i)
      CHECK(xs[c * 2 + i].value() == tr.states(grid.cell_mid_node(c), i));
  // tangent against a central difference on one control interval
  const int c = 70, k = 3;
  Eigen::MatrixXd up = u, um = u;
  up(k, 0) += 1e-6;
  um(k, 0) -= 1e-6;
  double fd = (integrate(spec, up, theta, grid).states(grid.cell_mid_node(c), 0) -
               integrate(spec, um, theta, grid).states(grid.cell_mid_node(c), 0)) /
              2e-6;
  CHECK(xs[c * 2].derivatives()(k) == doctest::Approx(fd).epsilon(1e-6));
}
