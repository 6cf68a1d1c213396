#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include <Eigen/Cholesky>

#include <oed/error.hpp>
#include <oed/evaluate.hpp>

#include "support.hpp"

using namespace oed;

namespace {

struct LinearCase {
  ProblemSpec spec;
  DiscreteDesign design;
  GaussianPrior prior;
  ParticleCloud cloud;
};

LinearCase linear_case(double sigma) {
  LinearCase c;
  c.spec = oedtest::scalar_spec(std::make_shared<oedtest::MixedDrift>(), 4.0, 8, 2, 0.5);
  c.spec.noise.sigma = {sigma, 2 * sigma};
  c.spec.budget = 6;
  c.spec.min_separation = 0.5;
  c.design.u = Eigen::MatrixXd::Constant(1, 1, 0.5);
  for (int cell : {0, 2, 4, 6}) c.design.activations.push_back({c.spec.cell_midpoint(cell), 0, cell});
  for (int cell : {3, 7}) c.design.activations.push_back({c.spec.cell_midpoint(cell), 1, cell});
  std::sort(c.design.activations.begin(), c.design.activations.end(),
            [](const Activation& a, const Activation& b) { return a.cell < b.cell; });
  c.prior = GaussianPrior{Eigen::Vector2d(1.0, -0.5), Eigen::Matrix2d::Identity()};
  c.cloud = build_prior(c.prior, {3, 3});
  return c;
}

}  // namespace

TEST_CASE("simulated data") {
  ProblemSpec spec = benchmark_model("harmonic", "similar");
  spec.noise.sigma = {1e-12, 1e-12};
  RelaxedDesign r{Eigen::MatrixXd::Constant(12, 1, 0.3), Eigen::MatrixXd::Zero(120, 2)};
  for (int c : {5, 30, 60, 90}) r.w(c, c % 2) = 1.0;
  DiscreteDesign d = round_design(r, spec);
  REQUIRE(d.activations.size() == 4);
  const Eigen::Vector2d theta(6.0, 8.5);
  Dataset data = simulate_data(spec, d, theta, 3);
  const TimeGrid grid(spec);
  const Trajectory tr = integrate(spec, d.u, theta, grid);
  REQUIRE(data.records.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(data.records[i].time == d.activations[i].time);
    CHECK(data.records[i].sensor == d.activations[i].sensor);
    const double h = tr.states(grid.node_of_time(d.activations[i].time), d.activations[i].sensor);
    CHECK(std::abs(data.records[i].value - h) <= 1e-10);
  }
  Dataset again = simulate_data(spec, d, theta, 3);
  for (size_t i = 0; i < 4; ++i) CHECK(again.records[i].value == data.records[i].value);

  spec.noise.sigma = {0.03, 0.025};
  DiscreteDesign one{d.u, {d.activations[0]}};
  const double h = tr.states(grid.node_of_time(one.activations[0].time), one.activations[0].sensor);
  double sum = 0.0;
  for (int s = 0; s < 10000; ++s) sum += simulate_data(spec, one, theta, 1000 + s).records[0].value;
  CHECK(std::abs(sum / 10000 - h) <= 3 * spec.noise.sigma[one.activations[0].sensor] / 100);

  DiscreteDesign crowded{d.u, {{spec.cell_midpoint(5), 0, 5}, {spec.cell_midpoint(6), 0, 6}}};
  CHECK_THROWS_AS(simulate_data(spec, crowded, theta, 1), ArgumentError);
}

TEST_CASE("maximum likelihood fits") {
  LinearCase c = linear_case(0.1);
  Dataset data = simulate_data(c.spec, c.design, Eigen::Vector2d(0.7, 0.2), 9);
  MleResult fit = mle_fit(c.spec, c.design, data, c.prior, c.cloud);
  REQUIRE(fit.ok);
  // weighted normal equations of y = h(x0) + t A theta
  const int n = static_cast<int>(data.records.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n), wt(n);
  for (int i = 0; i < n; ++i) {
    const auto& r = data.records[i];
    const double t = r.time;
    X.row(i) = r.sensor == 0 ? Eigen::RowVector2d(t, t) : Eigen::RowVector2d(t, -2 * t);
    const double offset = r.sensor == 0 ? 0.5 + 0.5 : 0.5 - 1.0;
    y(i) = r.value - offset;
    wt(i) = 1.0 / (c.spec.noise.sigma[r.sensor] * c.spec.noise.sigma[r.sensor]);
  }
  const Eigen::Vector2d wls =
      (X.transpose() * wt.asDiagonal() * X).ldlt().solve(X.transpose() * wt.asDiagonal() * y);
  CHECK((fit.theta - wls).cwiseAbs().maxCoeff() <= 1e-6);

  MleResult again = mle_fit(c.spec, c.design, data, c.prior, c.cloud);
  CHECK(again.theta == fit.theta);

  Dataset empty = data;
  empty.records.clear();
  DiscreteDesign none{c.design.u, {}};
  CHECK_THROWS_AS(mle_fit(c.spec, none, empty, c.prior, c.cloud), ArgumentError);
}

TEST_CASE("noiseless fit recovers the truth") {
  ProblemSetup setup = benchmark_setup("harmonic", "similar");
  DesignProblem p = make_design_problem(setup);
  p.spec.noise.sigma = {1e-9, 1e-9};
  RelaxedDesign r{Eigen::MatrixXd::Constant(12, 1, 0.5), Eigen::MatrixXd::Zero(120, 2)};
  for (int cell : {4, 20, 40, 61, 80, 101}) r.w(cell, cell % 2) = 1.0;
  DiscreteDesign d = round_design(r, p.spec);
  const Eigen::VectorXd theta = p.prior.mean;
  Dataset data = simulate_data(p.spec, d, theta, 5);
  MleResult fit = mle_fit(p.spec, d, data, setup.prior.prior, p.prior);
  REQUIRE(fit.ok);
  CHECK((fit.theta - theta).cwiseAbs().maxCoeff() <= 1e-6);

  ProblemSetup lv = benchmark_setup("lotka_volterra", "lognormal");
  DesignProblem q = make_design_problem(lv);
  q.spec.noise.sigma = {1e-9, 1e-9};
  RelaxedDesign rl{Eigen::MatrixXd::Constant(12, 1, 0.5), Eigen::MatrixXd::Zero(96, 2)};
  for (int cell : {10, 30, 50, 70}) rl.w(cell, cell % 2) = 1.0;
  DiscreteDesign dl = round_design(rl, q.spec);
  Dataset dlv = simulate_data(q.spec, dl, q.prior.mean, 5);
  MleResult flv = mle_fit(q.spec, dl, dlv, lv.prior.prior, q.prior);
  REQUIRE(flv.ok);
  CHECK((flv.theta - q.prior.mean).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("paired Monte Carlo evaluation") {
  LinearCase c = linear_case(1e-9);
  DiscreteDesign other = c.design;
  other.activations.pop_back();
  std::vector<std::pair<std::string, DiscreteDesign>> designs{{"full", c.design}, {"short", other}};
  EvalReport quiet = mc_evaluate(c.spec, designs, c.prior, c.cloud, 1, 4);
  for (const auto& row : quiet.rows) {
    CHECK(row.ok);
    CHECK(row.err_l2 <= 1e-6);
  }

  c = linear_case(0.2);
  designs = {{"full", c.design}, {"short", other}};
  EvalReport a = mc_evaluate(c.spec, designs, c.prior, c.cloud, 30, 11);
  EvalReport b = mc_evaluate(c.spec, designs, c.prior, c.cloud, 30, 11);
  CHECK(same_report(a, b));
  EvalReport other_seed = mc_evaluate(c.spec, designs, c.prior, c.cloud, 30, 12);
  CHECK_FALSE(same_report(a, other_seed));
  REQUIRE(a.rows.size() == 60);
  for (int r = 0; r < 30; ++r) {
    CHECK(a.rows[2 * r].theta_true == a.rows[2 * r + 1].theta_true);
    CHECK(a.rows[2 * r].run == r);
    CHECK(a.rows[2 * r].method == "full");
    for (int m = 0; m < 2; ++m) {
      CHECK(a.rows[2 * r + m].err.minCoeff() >= 0.0);
      CHECK(std::isfinite(a.rows[2 * r + m].err_l2));
    }
  }
  auto s = a.summary();
  REQUIRE(s.size() == 2);
  CHECK(s[0].completed == 30);
  CHECK(s[0].median_l2 == median(a.errors("full")));

  std::stringstream csv;
  write_csv(a, csv);
  CHECK(csv.str().rfind("method,run,theta_true_1,theta_true_2,theta_hat_1,theta_hat_2,err_1,err_2,err_l2,status\n", 0) == 0);
  EvalReport back = read_csv(csv);
  CHECK(same_report(a, back));

  a.rows[3].ok = false;
  a.rows[3].theta_hat.setConstant(std::nan(""));
  a.rows[3].err.setConstant(std::nan(""));
  a.rows[3].err_l2 = std::nan("");
  std::stringstream csv2;
  write_csv(a, csv2);
  CHECK(same_report(a, read_csv(csv2)));
  CHECK(a.summary()[1].failed == 1);
}

TEST_CASE("sign test") {
  EvalReport r;
  r.dim = 1;
  r.methods = {"a", "b"};
  for (int i = 0; i < 10; ++i) {
    for (int m = 0; m < 2; ++m) {
      EvalRow row{r.methods[m], i, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1),
                  Eigen::VectorXd::Zero(1), m == 0 ? 1.0 : 2.0, true};
      r.rows.push_back(row);
    }
  }
  SignTest t = sign_test(r, "a", "b");
  CHECK(t.wins == 10);
  CHECK(t.losses == 0);
  CHECK(t.p_value == doctest::Approx(2.0 / 1024).epsilon(1e-12));
  r.rows[1].err_l2 = 1.0;
  t = sign_test(r, "a", "b");
  CHECK(t.ties == 1);
  CHECK(t.p_value == doctest::Approx(2.0 / 512).epsilon(1e-12));
  CHECK(sign_test(r, "b", "a").p_value == t.p_value);
  CHECK(median({3.0, 1.0, 2.0, 10.0}) == 2.5);
  CHECK(std::isnan(median({})));
}
