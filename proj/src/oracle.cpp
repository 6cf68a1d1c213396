#include "oed/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "oed/dynamics.hpp"
#include "oed/error.hpp"
#include "oed/models.hpp"
#include "oed/parallel.hpp"

namespace oed {

namespace {

double log_det_spd(const Eigen::MatrixXd& A) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericError("matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Active rows of one stage.
struct ActiveRows {
  Eigen::MatrixXd H;
  Eigen::VectorXd R;
};

ActiveRows active_rows(const LinearGaussianStage& s) {
  int n = 0;
  for (int d = 0; d < s.active.size(); ++d) n += s.active(d) != 0;
  ActiveRows out{Eigen::MatrixXd(n, s.H.cols()), Eigen::VectorXd(n)};
  for (int d = 0, r = 0; d < s.active.size(); ++d)
    if (s.active(d)) {
      out.H.row(r) = s.H.row(d);
      out.R(r++) = s.R(d);
    }
  return out;
}

Eigen::MatrixXd stage_information(const LinearGaussianStage& s) {
  ActiveRows a = active_rows(s);
  return a.H.transpose() * a.R.cwiseInverse().asDiagonal() * a.H;
}

double log_sum_exp(const double* v, int n) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

McEstimate summarize(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0};
}

}  // namespace

void validate(const LinearGaussianModel& model) {
  const int n = model.dim();
  if (n < 1) throw ArgumentError("linear-Gaussian model needs a parameter");
  if (model.S0.rows() != n || model.S0.cols() != n)
    throw ArgumentError("prior covariance has the wrong shape");
  if ((model.S0 - model.S0.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + model.S0.cwiseAbs().maxCoeff()))
    throw ArgumentError("prior covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(model.S0);
  if (llt.info() != Eigen::Success)
    throw ArgumentError("prior covariance is not positive definite");
  for (const auto& s : model.stages) {
    const auto m = s.H.rows();
    if (s.H.cols() != n || s.b.size() != m || s.R.size() != m ||
        s.active.size() != m)
      throw ArgumentError("stage has inconsistent shapes");
    if (!(s.R.array() > 0).all())
      throw ArgumentError("observation variances must be positive");
  }
}

LgEig lg_eig_closed_form(const LinearGaussianModel& model) {
  validate(model);
  const int n = model.dim();
  LgEig out;
  out.increments.resize(model.stages.size());
  Eigen::MatrixXd precision = model.S0.inverse();
  for (size_t i = 0; i < model.stages.size(); ++i) {
    const Eigen::MatrixXd F = stage_information(model.stages[i]);
    const Eigen::MatrixXd sigma = precision.inverse();
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) + sigma * F;
    const double det = M.determinant();
    if (!(det > 0)) throw NumericError("singular covariance update");
    out.increments(i) = 0.5 * std::log(det);
    precision += F;
  }
  out.total = out.increments.sum();
  return out;
}

double lg_tilt_exact(const LinearGaussianModel& model) {
  validate(model);
  const int n = model.dim();
  const Eigen::MatrixXd prior_precision = model.S0.inverse();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
  double total = 0.0;
  for (const auto& stage : model.stages) {
    // exp(-1/2 (theta - m0)^T F (theta - m0)) N(m0, S0) = N(m0, (S0^-1 + F)^-1)
    const Eigen::MatrixXd tilted = (prior_precision + F).inverse();
    ActiveRows a = active_rows(stage);
    if (a.R.size() > 0) {
      // h(y) - h(y | theta) for y = H theta + b + e
      Eigen::MatrixXd S = a.H * tilted * a.H.transpose();
      S.diagonal() += a.R;
      total += 0.5 * (log_det_spd(S) - a.R.array().log().sum());
    }
    F += stage_information(stage);
  }
  return total;
}

LinearGaussianModel random_lg_model(int n_theta, int stages, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LinearGaussianModel m;
  m.m0.resize(n_theta);
  for (auto& v : m.m0) v = normal(rng);
  Eigen::MatrixXd A(n_theta, n_theta);
  for (auto& v : A.reshaped()) v = normal(rng);
  m.S0 = A * A.transpose() / n_theta;
  m.S0.diagonal().array() += 0.1;
  for (int i = 0; i < stages; ++i) {
    const int nd = 1 + static_cast<int>(unit(rng) < 0.5);
    LinearGaussianStage s{Eigen::MatrixXd(nd, n_theta), Eigen::VectorXd(nd),
                          Eigen::VectorXd(nd), Eigen::VectorXi(nd)};
    for (auto& v : s.H.reshaped()) v = normal(rng);
    for (int d = 0; d < nd; ++d) {
      s.b(d) = normal(rng);
      s.R(d) = 0.2 + 1.8 * unit(rng);
      s.active(d) = unit(rng) < 0.7;
    }
    m.stages.push_back(s);
  }
  if (stages > 0) m.stages[0].active(0) = 1;
  return m;
}

// ---------------------------------------------------------------------------

void validate(const DiscreteModel& model) {
  const auto P = model.prior.size();
  if (P < 1) throw ArgumentError("discrete model needs a parameter value");
  if ((model.prior.array() < 0).any() ||
      std::abs(model.prior.sum() - 1.0) > 1e-12)
    throw ArgumentError("prior masses must be a probability vector");
  if (!model.measured.empty() && model.measured.size() != model.tables.size())
    throw ArgumentError("measured flags do not match the stages");
  for (const auto& t : model.tables) {
    if (t.rows() != P || t.cols() < 1)
      throw ArgumentError("probability table has the wrong shape");
    if ((t.array() < 0).any() ||
        ((t.rowwise().sum().array() - 1.0).abs() > 1e-12).any())
      throw ArgumentError("probability table rows must sum to one");
  }
}

namespace {

double plogp(double p) { return p > 0 ? p * std::log(p) : 0.0; }

struct Enumerator {
  const Eigen::VectorXd& prior;
  const std::vector<const Eigen::MatrixXd*>& tables;
  // entry i: sums over (theta, y_1:i+1)
  std::vector<double> neg_h_joint;  // sum p(y) log p(y)
  std::vector<double> neg_h_cond;   // sum p(theta, y) log p(y | theta)
  std::vector<double> cond_mi;      // I(theta; y_i+1 | y_1:i)

  void recurse(int depth, const Eigen::VectorXd& joint, double p_prev) {
    if (depth == static_cast<int>(tables.size())) return;
    const Eigen::MatrixXd& T = *tables[depth];
    Eigen::VectorXd next(joint.size());
    for (int y = 0; y < T.cols(); ++y) {
      next = joint.cwiseProduct(T.col(y));
      const double p = next.sum();
      if (p <= 0.0) continue;
      neg_h_joint[depth] += p * std::log(p);
      for (int k = 0; k < joint.size(); ++k) {
        if (next(k) <= 0.0) continue;
        neg_h_cond[depth] += next(k) * std::log(next(k) / prior(k));
        // log p(y_i | theta) p(y_1:i-1) / p(y_1:i)
        cond_mi[depth] += next(k) * std::log(T(k, y) * p_prev / p);
      }
      recurse(depth + 1, next, p);
    }
  }
};

}  // namespace

MiReport enumerate_mi(const DiscreteModel& model) {
  validate(model);
  std::vector<const Eigen::MatrixXd*> tables;
  for (size_t i = 0; i < model.tables.size(); ++i)
    if (model.measured.empty() || model.measured[i]) tables.push_back(&model.tables[i]);
  const int M = static_cast<int>(tables.size());
  double support = static_cast<double>(model.prior.size());
  for (auto* t : tables) support *= static_cast<double>(t->cols());
  if (support > 1e7)
    throw CapacityError("joint support of the discrete model exceeds 1e7 entries");

  Enumerator e{model.prior, tables, std::vector<double>(M, 0.0),
               std::vector<double>(M, 0.0), std::vector<double>(M, 0.0)};
  e.recurse(0, model.prior, 1.0);

  MiReport r;
  r.k_time = M;
  r.conditional = Eigen::Map<Eigen::VectorXd>(e.cond_mi.data(), M);
  r.instantaneous.resize(M);
  r.gaps.resize(M);
  for (int i = 0; i < M; ++i) {
    const Eigen::MatrixXd& T = *tables[i];
    const Eigen::RowVectorXd marginal = model.prior.transpose() * T;
    double h_marg = 0.0, h_cond = 0.0;
    for (int y = 0; y < T.cols(); ++y) h_marg -= plogp(marginal(y));
    for (int k = 0; k < T.rows(); ++k)
      for (int y = 0; y < T.cols(); ++y) h_cond -= model.prior(k) * plogp(T(k, y));
    r.instantaneous(i) = h_marg - h_cond;
    // I(y_i; y_1:i-1) = H(y_i) + H(y_1:i-1) - H(y_1:i)
    const double h_prev = i > 0 ? -e.neg_h_joint[i - 1] : 0.0;
    r.gaps(i) = h_marg + h_prev + e.neg_h_joint[i];
  }
  r.eig = M > 0 ? e.neg_h_cond[M - 1] - e.neg_h_joint[M - 1] : 0.0;
  r.inst = r.instantaneous.sum();
  return r;
}

DiscreteModel random_discrete_model(int params, int stages, int alphabet,
                                    std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  auto simplex = [&](int n) {
    Eigen::VectorXd v(n);
    for (auto& x : v) x = expo(rng);
    return Eigen::VectorXd(v / v.sum());
  };
  DiscreteModel m;
  m.prior = simplex(params);
  for (int i = 0; i < stages; ++i) {
    Eigen::MatrixXd t(params, alphabet);
    for (int k = 0; k < params; ++k) t.row(k) = simplex(alphabet).transpose();
    m.tables.push_back(t);
  }
  return m;
}

// ---------------------------------------------------------------------------

McEstimate nested_mc_eig(const ProblemSpec& spec, const DiscreteDesign& design,
                         const ParticleCloud& prior, int n_outer, int n_inner,
                         std::uint64_t seed) {
  if (n_outer < 10 || n_inner < 10)
    throw ArgumentError("nested Monte Carlo needs at least 10 outer and inner samples");
  validate(spec);
  if (prior.dim() != spec.param_dim())
    throw ArgumentError("prior dimension does not match the model");
  const int A = static_cast<int>(design.activations.size());
  if (A == 0) return {0.0, 0.0};

  const TimeGrid grid(spec);
  const int N = prior.size(), nx = spec.state_dim();
  Eigen::MatrixXd pred(N, A);
  Eigen::VectorXd sigma(A);
  for (int a = 0; a < A; ++a) sigma(a) = spec.noise.sigma[design.activations[a].sensor];
  parallel_for(N, [&](int k) {
    const Trajectory tr = integrate(spec, design.u, prior.atoms.row(k).transpose(), grid);
    for (int a = 0; a < A; ++a) {
      const auto& act = design.activations[a];
      const Eigen::VectorXd x = tr.states.row(grid.node_of_time(act.time)).transpose();
      pred(k, a) = spec.model->observe(act.sensor, std::span<const double>(x.data(), nx));
    }
  });

  std::vector<double> cumulative(N);
  std::partial_sum(prior.masses.data(), prior.masses.data() + N, cumulative.begin());
  const bool exact_inner = N <= n_inner;
  std::vector<double> samples(n_outer);
  parallel_for(n_outer, [&](int i) {
    std::mt19937_64 rng = sample_stream(seed, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> unit(0.0, cumulative.back());
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&] {
      const double r = unit(rng);
      return static_cast<int>(std::min<std::ptrdiff_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin(),
          N - 1));
    };
    const int k0 = draw();
    Eigen::VectorXd y(A);
    for (int a = 0; a < A; ++a) y(a) = pred(k0, a) + sigma(a) * normal(rng);
    auto loglik = [&](int k) {
      return -0.5 * ((y - pred.row(k).transpose()).cwiseQuotient(sigma)).squaredNorm();
    };
    std::vector<double> terms;
    if (exact_inner) {
      terms.resize(N);
      for (int k = 0; k < N; ++k)
        terms[k] = prior.masses(k) > 0 ? std::log(prior.masses(k)) + loglik(k)
                                       : -std::numeric_limits<double>::infinity();
      samples[i] = loglik(k0) - log_sum_exp(terms.data(), N);
    } else {
      terms.resize(n_inner);
      for (int j = 0; j < n_inner; ++j) terms[j] = loglik(draw());
      samples[i] = loglik(k0) - (log_sum_exp(terms.data(), n_inner) - std::log(n_inner));
    }
  });
  return summarize(samples);
}

McEstimate nested_mc_eig(const DiscreteModel& model, int n_outer, int n_inner,
                         std::uint64_t seed) {
  if (n_outer < 10 || n_inner < 10)
    throw ArgumentError("nested Monte Carlo needs at least 10 outer and inner samples");
  validate(model);
  std::vector<const Eigen::MatrixXd*> tables;
  for (size_t i = 0; i < model.tables.size(); ++i)
    if (model.measured.empty() || model.measured[i]) tables.push_back(&model.tables[i]);
  if (tables.empty()) return {0.0, 0.0};
  const int P = static_cast<int>(model.prior.size());
  const bool exact_inner = P <= n_inner;
  std::vector<double> samples(n_outer);
  parallel_for(n_outer, [&](int i) {
    std::mt19937_64 rng = sample_stream(seed, static_cast<std::uint64_t>(i));
    std::discrete_distribution<int> pick(model.prior.data(), model.prior.data() + P);
    const int k0 = pick(rng);
    std::vector<int> y(tables.size());
    for (size_t s = 0; s < tables.size(); ++s) {
      const Eigen::RowVectorXd row = tables[s]->row(k0);
      std::discrete_distribution<int> obs(row.data(), row.data() + row.size());
      y[s] = obs(rng);
    }
    auto lik = [&](int k) {
      double p = 1.0;
      for (size_t s = 0; s < tables.size(); ++s) p *= (*tables[s])(k, y[s]);
      return p;
    };
    double marginal = 0.0;
    if (exact_inner) {
      for (int k = 0; k < P; ++k) marginal += model.prior(k) * lik(k);
    } else {
      for (int j = 0; j < n_inner; ++j) marginal += lik(pick(rng));
      marginal /= n_inner;
    }
    samples[i] = std::log(lik(k0)) - std::log(marginal);
  });
  return summarize(samples);
}

McEstimate mc_conditional_entropy(const Eigen::VectorXd& w,
                                  const NoiseSpec& noise, int samples,
                                  std::uint64_t seed) {
  validate(noise);
  if (w.size() != noise.sensors())
    throw ArgumentError("weight vector does not match the sensors");
  if ((w.array() < 0).any() || (w.array() > 1).any())
    throw ArgumentError("weights must lie in [0, 1]");
  if (samples < 2) throw ArgumentError("need at least two samples");
  std::mt19937_64 rng = sample_stream(seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(samples);
  for (int i = 0; i < samples; ++i) {
    double nlp = 0.0;
    for (int d = 0; d < w.size(); ++d) {
      if (unit(rng) < w(d)) {
        const double z = normal(rng);
        nlp += -std::log(w(d)) + 0.5 * z * z +
               0.5 * std::log(2.0 * std::numbers::pi * noise.variance(d));
      } else {
        nlp += -std::log(1.0 - w(d));
      }
    }
    v[i] = nlp;
  }
  return summarize(v);
}

// ---------------------------------------------------------------------------

ScalarLgBenchmark scalar_lg_benchmark() {
  constexpr int cells = 4;
  constexpr double sigma = 2.0, prior_mean = 1.0, prior_var = 1.0;
  ScalarLgBenchmark b;
  ProblemSpec& s = b.spec;
  s.model = make_model("linear_drift", {1});
  s.horizon = cells;
  s.x0 = Eigen::VectorXd::Zero(1);
  s.control_lower = Eigen::VectorXd::Zero(1);
  s.control_upper = Eigen::VectorXd::Ones(1);
  s.control_intervals = 1;
  s.weight_cells = cells;
  s.steps_per_cell = 2;
  s.noise.sigma = {sigma};
  s.noise.order = {16};
  s.budget = cells;
  s.min_separation = 0.0;
  b.prior = GaussianPrior{Eigen::VectorXd::Constant(1, prior_mean),
                          Eigen::MatrixXd::Constant(1, 1, prior_var)};
  b.design.u = Eigen::MatrixXd::Constant(1, 1, 0.5);
  b.design.w = Eigen::MatrixXd::Ones(cells, 1);
  b.discrete.u = b.design.u;
  b.model.m0 = b.prior.mean;
  b.model.S0 = b.prior.cov;
  for (int c = 0; c < cells; ++c) {
    b.discrete.activations.push_back({s.cell_midpoint(c), 0, c});
    b.model.stages.push_back({Eigen::MatrixXd::Constant(1, 1, s.cell_midpoint(c)),
                              Eigen::VectorXd::Zero(1),
                              Eigen::VectorXd::Constant(1, sigma * sigma),
                              Eigen::VectorXi::Ones(1)});
  }
  return b;
}

double scalar_lg_particle_tilt(const ScalarLgBenchmark& bench, int order) {
  const ParticleCloud cloud = build_prior(bench.prior, {order});
  return -tilt_objective(bench.design, cloud, bench.spec, mean_center(cloud), false).value;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd replicator_rk4(const ParticleCloud& prior,
                               const std::vector<TiltCenter>& centers,
                               const std::vector<FisherAccumulator>& fisher,
                               const ProblemSpec& spec) {
  if (centers.empty() || fisher.size() != centers.size())
    throw ArgumentError("one Fisher accumulator per center is required");
  const TimeGrid grid(spec);
  const int N = prior.size(), J = static_cast<int>(centers.size());
  const int S = grid.steps();
  // state: masses on (atom, center), flattened k * J + j
  Eigen::VectorXd mu(N * J);
  double center_total = 0.0;
  for (const auto& c : centers) center_total += c.mass;
  for (int k = 0; k < N; ++k)
    for (int j = 0; j < J; ++j) mu(k * J + j) = prior.masses(k) * centers[j].mass / center_total;
  mu /= mu.sum();

  Eigen::MatrixXd out(S + 1, N);
  auto atom_masses = [&](const Eigen::VectorXd& m) {
    Eigen::VectorXd a(N);
    for (int k = 0; k < N; ++k) a(k) = m.segment(k * J, J).sum();
    return a;
  };
  out.row(0) = atom_masses(mu).transpose();

  Eigen::VectorXd g(N * J);
  for (int s = 0; s < S; ++s) {
    const int c = grid.cell_of_step(s);
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < J; ++j) {
        const Eigen::VectorXd d = prior.atoms.row(k).transpose() - centers[j].theta;
        g(k * J + j) = -0.5 * d.dot(fisher[j].rate[c] * d);
      }
    const double spread = g.maxCoeff() - g.minCoeff();
    const double h = grid.step();
    const int sub = std::max(1, static_cast<int>(std::ceil(h * spread / 0.02)));
    const double dt = h / sub;
    auto rhs = [&](const Eigen::VectorXd& m) -> Eigen::VectorXd {
      const double mean = m.dot(g);
      return m.cwiseProduct((g.array() - mean).matrix());
    };
    for (int i = 0; i < sub; ++i) {
      const Eigen::VectorXd k1 = rhs(mu);
      const Eigen::VectorXd k2 = rhs(mu + 0.5 * dt * k1);
      const Eigen::VectorXd k3 = rhs(mu + 0.5 * dt * k2);
      const Eigen::VectorXd k4 = rhs(mu + dt * k3);
      mu += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.row(s + 1) = atom_masses(mu).transpose();
  }
  return out;
}

}  // namespace oed
