#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/LU>

#include <oed/error.hpp>
#include <oed/oracle.hpp>

using namespace oed;

namespace {

LinearGaussianModel scalar_lg(int stages) {
  LinearGaussianModel m;
  m.m0 = Eigen::VectorXd::Zero(1);
  m.S0 = Eigen::MatrixXd::Identity(1, 1);
  for (int i = 0; i < stages; ++i)
    m.stages.push_back({Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1),
                        Eigen::VectorXd::Ones(1), Eigen::VectorXi::Ones(1)});
  return m;
}

DiscreteModel noiseless_binary(int copies) {
  DiscreteModel m;
  m.prior = Eigen::Vector2d(0.5, 0.5);
  for (int i = 0; i < copies; ++i) m.tables.push_back(Eigen::Matrix2d::Identity());
  return m;
}

}  // namespace

TEST_CASE("linear-Gaussian closed form") {
  CHECK(lg_eig_closed_form(scalar_lg(1)).total == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
  LgEig two = lg_eig_closed_form(scalar_lg(2));
  CHECK(two.increments(0) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
  CHECK(two.increments(1) == doctest::Approx(0.5 * std::log(1.5)).epsilon(1e-14));
  CHECK(two.total == doctest::Approx(0.549306).epsilon(1e-6));

  LinearGaussianModel dec;
  dec.m0 = Eigen::Vector2d::Zero();
  dec.S0 = Eigen::Matrix2d::Identity();
  dec.stages.push_back({Eigen::RowVector2d(1, 0), Eigen::VectorXd::Zero(1),
                        Eigen::VectorXd::Ones(1), Eigen::VectorXi::Ones(1)});
  dec.stages.push_back({Eigen::RowVector2d(0, 1), Eigen::VectorXd::Zero(1),
                        Eigen::VectorXd::Ones(1), Eigen::VectorXi::Ones(1)});
  CHECK(lg_eig_closed_form(dec).total == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  for (const auto& m : {scalar_lg(1), scalar_lg(2), dec})
    CHECK(std::abs(lg_tilt_exact(m) - lg_eig_closed_form(m).total) <= 1e-10);

  LinearGaussianModel zero = dec;
  for (auto& s : zero.stages) s.H.setZero();
  CHECK(lg_tilt_exact(zero) == 0.0);
  CHECK(lg_eig_closed_form(zero).total == 0.0);

  LinearGaussianModel bad = dec;
  bad.S0(0, 0) = -1.0;
  CHECK_THROWS_AS(lg_eig_closed_form(bad), ArgumentError);
  bad = dec;
  bad.stages[0].R(0) = 0.0;
  CHECK_THROWS_AS(lg_tilt_exact(bad), ArgumentError);
}

TEST_CASE("tilt exactness on random linear-Gaussian models") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    LinearGaussianModel m = random_lg_model(1 + trial % 3, 1 + trial % 5, rng);
    // sequential closed form against the one-shot determinant
    const int n = m.dim();
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
    for (const auto& s : m.stages)
      for (int d = 0; d < s.H.rows(); ++d)
        if (s.active(d)) F += s.H.row(d).transpose() * s.H.row(d) / s.R(d);
    const double oneshot =
        0.5 * std::log((Eigen::MatrixXd::Identity(n, n) + m.S0 * F).determinant());
    const double closed = lg_eig_closed_form(m).total;
    CHECK(std::abs(closed - oneshot) <= 1e-10);
    CHECK(std::abs(lg_tilt_exact(m) - closed) <= 1e-10);
  }
}

TEST_CASE("enumeration on noiseless channels") {
  MiReport one = enumerate_mi(noiseless_binary(1));
  CHECK(one.eig == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(std::abs(one.gaps(0)) <= 1e-15);

  MiReport two = enumerate_mi(noiseless_binary(2));
  CHECK(two.conditional(0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(std::abs(two.conditional(1)) <= 1e-15);
  CHECK(two.instantaneous(0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(two.instantaneous(1) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(two.gaps(1) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(two.k_time == 2);

  DiscreteModel skip = noiseless_binary(3);
  skip.measured = {true, false, true};
  CHECK(enumerate_mi(skip).k_time == 2);

  DiscreteModel bad = noiseless_binary(1);
  bad.tables[0](0, 0) = 0.5;
  CHECK_THROWS_AS(enumerate_mi(bad), ArgumentError);

  DiscreteModel big;
  big.prior = Eigen::VectorXd::Constant(10, 0.1);
  for (int i = 0; i < 7; ++i) big.tables.push_back(Eigen::MatrixXd::Constant(10, 10, 0.1));
  CHECK_THROWS_AS(enumerate_mi(big), CapacityError);
}

TEST_CASE("redundancy identity and bounds on random discrete models") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    DiscreteModel m = random_discrete_model(4, 3, 3, rng);
    MiReport r = enumerate_mi(m);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(r.instantaneous(i) - r.conditional(i) - r.gaps(i)) <= 1e-12);
      CHECK(r.gaps(i) >= -1e-12);
    }
    CHECK(std::abs(r.eig - r.conditional.sum()) <= 1e-12);
    CHECK(r.eig <= r.inst + 1e-12);
    CHECK(r.inst / r.k_time <= r.eig + 1e-12);
  }
}

TEST_CASE("nested Monte Carlo") {
  ScalarLgBenchmark b = scalar_lg_benchmark();
  ParticleCloud cloud = build_prior(b.prior, {20});
  DiscreteDesign empty{b.discrete.u, {}};
  McEstimate none = nested_mc_eig(b.spec, empty, cloud, 100, 100, 1);
  CHECK(none.estimate == 0.0);
  CHECK(none.std_error == 0.0);

  McEstimate e = nested_mc_eig(b.spec, b.discrete, cloud, 20000, 100, 7);
  const double closed = lg_eig_closed_form(b.model).total;
  CHECK(std::abs(e.estimate - closed) <= 3 * e.std_error);
  McEstimate again = nested_mc_eig(b.spec, b.discrete, cloud, 20000, 100, 7);
  CHECK(again.estimate == e.estimate);

  std::mt19937_64 rng(11);
  DiscreteModel m = random_discrete_model(4, 3, 3, rng);
  McEstimate d = nested_mc_eig(m, 20000, 10, 2);
  CHECK(std::abs(d.estimate - enumerate_mi(m).eig) <= 3 * d.std_error);
  CHECK_THROWS_AS(nested_mc_eig(m, 5, 10, 2), ArgumentError);
}

TEST_CASE("particle tilt converges to the closed form") {
  ScalarLgBenchmark b = scalar_lg_benchmark();
  const double closed = lg_eig_closed_form(b.model).total;
  CHECK(std::abs(lg_tilt_exact(b.model) - closed) <= 1e-12);
  double prev = 1e300;
  for (int n : {2, 5, 10, 20}) {
    const double err = std::abs(scalar_lg_particle_tilt(b, n) - closed);
    CHECK(err <= prev);
    prev = err;
  }
  CHECK(prev / closed <= 1e-3);
}

TEST_CASE("masked-observation entropy") {
  NoiseSpec noise{{0.03, 0.025}, {5, 5}};
  Eigen::Vector2d w(0.3, 0.8);
  McEstimate e = mc_conditional_entropy(w, noise, 200000, 4);
  CHECK(std::abs(e.estimate - relaxed_conditional_entropy(w, noise)) <= 3 * e.std_error);
  McEstimate none = mc_conditional_entropy(Eigen::Vector2d::Zero(), noise, 10, 1);
  CHECK(none.estimate == 0.0);
}

TEST_CASE("replicator integration matches the closed-form tilt") {
  ProblemSpec spec = benchmark_model("harmonic", "similar");
  spec.weight_cells = 24;
  spec.steps_per_cell = 4;
  ParticleCloud prior = build_prior(UniformBoxPrior{Eigen::Vector2d(5, 5), Eigen::Vector2d(10, 10)}, {4, 4});
  ParticleCloud centers = build_prior(UniformBoxPrior{Eigen::Vector2d(5, 5), Eigen::Vector2d(10, 10)}, {2, 2});
  RelaxedDesign d{Eigen::MatrixXd::Constant(12, 1, 0.4), Eigen::MatrixXd::Constant(24, 2, 0.1)};
  for (const auto& c : {mean_center(prior), cloud_centers(centers)}) {
    TiltPath path = tilt_weight_path(d, prior, spec, c);
    Eigen::MatrixXd rk = replicator_rk4(prior, c, path.fisher, spec);
    CHECK((rk - path.mu).cwiseAbs().maxCoeff() <= 1e-6);
  }
}
