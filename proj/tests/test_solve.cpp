#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <oed/error.hpp>
#include <oed/solve.hpp>

#include "support.hpp"

using namespace oed;

namespace {

ProblemSpec toy_spec(int cells, double T, int budget, double sep) {
  ProblemSpec spec = oedtest::scalar_spec(make_model("linear_drift", {1}), T, cells, 2, 0.0);
  spec.budget = budget;
  spec.min_separation = sep;
  return spec;
}

// Brute-force maximum of total weight over feasible K-subsets of single
// sensor candidates.
double best_subset_weight(const Eigen::VectorXd& w, const ProblemSpec& spec) {
  const int n = static_cast<int>(w.size());
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) > spec.budget) continue;
    bool ok = true;
    double total = 0.0;
    for (int i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      total += w(i);
      for (int j = 0; j < i; ++j)
        if ((mask >> j & 1) &&
            std::abs(spec.cell_midpoint(i) - spec.cell_midpoint(j)) < spec.min_separation - 1e-12)
          ok = false;
    }
    if (ok) best = std::max(best, total);
  }
  return best;
}

}  // namespace

TEST_CASE("criterion names") {
  for (Criterion c : all_criteria()) CHECK(parse_criterion(criterion_name(c)) == c);
  CHECK_THROWS_AS(parse_criterion("e_opt"), ArgumentError);
}

TEST_CASE("capped projection") {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(20);
  Eigen::VectorXd p = project_capped(w, 8.0);
  for (double v : p) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));

  Eigen::VectorXd feasible = Eigen::VectorXd::LinSpaced(10, 0.0, 0.5);
  CHECK((project_capped(feasible, 8.0) - feasible).norm() == 0.0);

  // generic QP oracle: KKT conditions of min |x - w|^2 on the capped box
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.5, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd v(15);
    for (auto& x : v) x = g(rng);
    const double K = 1.0 + trial % 6;
    Eigen::VectorXd x = project_capped(v, K);
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() <= 1.0);
    CHECK(x.sum() <= K + 1e-10);
    CHECK((project_capped(x, K) - x).norm() <= 1e-12);
    // multiplier tau >= 0 with x = clip(v - tau), tau > 0 only if budget active
    double tau = 0.0;
    int free = 0;
    for (int i = 0; i < 15; ++i)
      if (x(i) > 1e-12 && x(i) < 1 - 1e-12) {
        tau += v(i) - x(i);
        ++free;
      }
    if (free > 0) {
      tau /= free;
      CHECK(tau >= -1e-10);
      for (int i = 0; i < 15; ++i)
        CHECK(std::abs(x(i) - std::clamp(v(i) - tau, 0.0, 1.0)) <= 1e-9);
      if (tau > 1e-9) CHECK(std::abs(x.sum() - K) <= 1e-10);
    }
  }
}

TEST_CASE("feasible projection clips controls") {
  ProblemSpec spec = benchmark_model("harmonic", "similar");
  Eigen::VectorXd z = Eigen::VectorXd::Constant(spec.control_vars() + spec.weight_vars(), 0.01);
  z(0) = -0.5;
  z(1) = 1.7;
  Eigen::VectorXd p = project_feasible(z, spec);
  CHECK(p(0) == 0.0);
  CHECK(p(1) == 1.0);
  CHECK((p.tail(spec.weight_vars()) - z.tail(spec.weight_vars())).norm() == 0.0);
  CHECK((project_feasible(p, spec) - p).norm() == 0.0);
}

TEST_CASE("objective dispatch") {
  DesignProblem p = make_design_problem(benchmark_setup("harmonic", "similar"));
  Eigen::VectorXd z = Eigen::VectorXd::Zero(p.spec.control_vars() + p.spec.weight_vars());
  CHECK(objective_and_gradient(p, Criterion::AOpt, z).value ==
        doctest::Approx(2.0 / kFisherRidge).epsilon(1e-12));
  CHECK(objective_and_gradient(p, Criterion::Inst, z).value == 0.0);
  CHECK(objective_and_gradient(p, Criterion::MultiTilt, z).gradient.size() == z.size());
  CHECK(p.centers.size() == 4);
  CHECK((p.nominal - Eigen::Vector2d(7.5, 7.5)).norm() < 1e-12);
}

TEST_CASE("rounding rules") {
  ProblemSpec spec = toy_spec(10, 1.0, 2, 0.5);
  RelaxedDesign r{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(10, 1)};
  DiscreteDesign d = round_design(r, spec);
  REQUIRE(d.activations.size() == 2);
  CHECK(d.activations[0].time == doctest::Approx(0.05));
  CHECK(d.activations[1].time == doctest::Approx(0.55));

  r.w.setZero();
  CHECK(round_design(r, spec).activations.empty());

  // two bumps
  ProblemSpec bumps = toy_spec(20, 10.0, 2, 1.0);
  RelaxedDesign b{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Constant(20, 1, 0.1)};
  b.w(3, 0) = 0.6;
  b.w(4, 0) = 0.9;  // t = 2.25
  b.w(13, 0) = 0.8; // t = 6.75
  b.w(14, 0) = 0.5;
  DiscreteDesign bd = round_design(b, bumps);
  REQUIRE(bd.activations.size() == 2);
  CHECK(bd.activations[0].cell == 4);
  CHECK(bd.activations[1].cell == 13);
  CHECK(b.w(4, 0) + b.w(13, 0) == doctest::Approx(best_subset_weight(b.w.col(0), bumps)));
}

TEST_CASE("rounding feasibility on random inputs") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ProblemSpec spec = benchmark_model("harmonic", "similar");
  for (int trial = 0; trial < 100; ++trial) {
    RelaxedDesign r{Eigen::MatrixXd::Constant(12, 1, 0.5), Eigen::MatrixXd(120, 2)};
    for (int i = 0; i < r.w.size(); ++i) {
      double v = unit(rng);
      r.w(i) = v < 0.6 ? 0.0 : v;
    }
    if (trial % 10 == 0) r.w.setConstant(0.25);
    DiscreteDesign d = round_design(r, spec);
    std::string why;
    CHECK_MESSAGE(is_feasible(d, spec, &why), why);
    for (const auto& a : d.activations) CHECK(r.w(a.cell, a.sensor) > 0.0);
  }
}

TEST_CASE("co-located activations share a time") {
  ProblemSpec spec = benchmark_model("harmonic", "uneven");
  RelaxedDesign r{Eigen::MatrixXd::Constant(12, 1, 0.5), Eigen::MatrixXd::Zero(120, 2)};
  r.w(10, 0) = 1.0;
  r.w(10, 1) = 0.9;
  r.w(11, 0) = 0.95;
  DiscreteDesign d = round_design(r, spec);
  REQUIRE(d.activations.size() == 2);
  CHECK(d.activations[0].cell == 10);
  CHECK(d.activations[1].cell == 10);
  CHECK(d.count(0) == 1);
  CHECK(d.count(1) == 1);
}

TEST_CASE("bang-bang toy optimum") {
  ProblemSpec spec = toy_spec(6, 3.0, 6, 0.0);
  spec.noise.sigma = {0.5};
  ProblemSetup setup{spec, PriorSetup{GaussianPrior{Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Identity(1, 1)}, {8}, {2}}};
  DesignProblem p = make_design_problem(setup);
  OptimizerOptions opts;
  opts.restarts = 2;
  OptimizeResult r = optimize(p, Criterion::Inst, opts);
  for (const auto& t : r.restarts)
    for (size_t i = 1; i < t.values.size(); ++i) CHECK(t.values[i] <= t.values[i - 1]);
  CHECK(r.restarts[r.best_restart].projected_gradient_norm <= 1e-4);
  // exhaustive vertex search at the returned controls
  double best = 1e300;
  Eigen::VectorXd best_w;
  for (unsigned mask = 0; mask < 64; ++mask) {
    RelaxedDesign v{r.design.u, Eigen::MatrixXd::Zero(6, 1)};
    for (int c = 0; c < 6; ++c) v.w(c, 0) = (mask >> c & 1) ? 1.0 : 0.0;
    double val = inst_objective(v, p.prior, spec).value;
    if (val < best) {
      best = val;
      best_w = v.w.col(0);
    }
  }
  CHECK((r.design.w.col(0) - best_w).cwiseAbs().maxCoeff() <= 1e-3);

  OptimizeResult again = optimize(p, Criterion::Inst, opts);
  CHECK(again.design.w == r.design.w);
  CHECK(again.design.u == r.design.u);
}

TEST_CASE("capped projection with per-entry bounds") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.4, 0.8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 12;
    Eigen::VectorXd v(n), lo = Eigen::VectorXd::Zero(n), hi = Eigen::VectorXd::Ones(n);
    for (auto& x : v) x = g(rng);
    for (int i = 0; i < n; ++i) {
      const double r = unit(rng);
      if (r < 0.15) lo(i) = 1.0;       // pinned
      else if (r < 0.3) hi(i) = 0.0;   // excluded
    }
    const double K = lo.sum() + 1.0 + trial % 4;
    Eigen::VectorXd x = project_capped(v, K, lo, hi);
    for (int i = 0; i < n; ++i) {
      CHECK(x(i) >= lo(i));
      CHECK(x(i) <= hi(i));
    }
    CHECK(x.sum() <= K + 1e-10);
    // variational inequality against random feasible points
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) y(i) = lo(i) + unit(rng) * (hi(i) - lo(i));
      if (y.sum() > K) {
        const double slack = K - lo.sum();
        const double free = y.sum() - lo.sum();
        for (int i = 0; i < n; ++i) y(i) = lo(i) + (y(i) - lo(i)) * slack / free;
      }
      CHECK((v - x).dot(y - x) <= 1e-9);
    }
  }
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  CHECK((project_capped(Eigen::VectorXd::Ones(4), 4.0, zero, Eigen::VectorXd::Ones(4)) -
         Eigen::VectorXd::Ones(4))
            .norm() == 0.0);
}

TEST_CASE("iterative rounding fills the budget under separation") {
  // information grows with time, so the relaxed optimum stacks its weight on
  // the last cells, closer together than the separation allows
  ProblemSpec spec = toy_spec(12, 3.0, 4, 0.6);
  ProblemSetup setup{spec, PriorSetup{GaussianPrior{Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Identity(1, 1)}, {6}, {2}}};
  DesignProblem p = make_design_problem(setup);
  OptimizerOptions opts;
  opts.restarts = 1;
  OptimizeResult plain = optimize(p, Criterion::Inst, opts);
  DiscreteDesign once = round_design(plain.design, spec);
  CHECK(once.activations.size() < 4);

  RoundedDesign r = design_and_round(p, Criterion::Inst, opts);
  CHECK(r.design.activations.size() == 4);
  CHECK(r.solves > 1);
  CHECK(is_feasible(r.design, spec));
  for (const auto& a : r.design.activations) CHECK(r.relaxed.design.w(a.cell, a.sensor) > 0.0);
  for (const auto& a : once.activations)
    CHECK(std::find(r.design.activations.begin(), r.design.activations.end(), a) !=
          r.design.activations.end());

  RoundedDesign again = design_and_round(p, Criterion::Inst, opts);
  CHECK(again.design.activations == r.design.activations);
}
