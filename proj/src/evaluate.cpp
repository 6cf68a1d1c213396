#include "oed/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "oed/dynamics.hpp"
#include "oed/error.hpp"
#include "oed/measure_sampling.hpp"
#include "oed/parallel.hpp"

namespace oed {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), tag};
  return std::mt19937_64(seq);
}

// Observation model of one design: predictions and their theta-Jacobian.
struct Predictor {
  const ProblemSpec& spec;
  const DiscreteDesign& design;
  TimeGrid grid;

  Predictor(const ProblemSpec& s, const DiscreteDesign& d) : spec(s), design(d), grid(s) {}

  Eigen::VectorXd values(const Eigen::VectorXd& theta) const {
    const Trajectory tr = integrate(spec, design.u, theta, grid);
    Eigen::VectorXd h(design.activations.size());
    const int nx = spec.state_dim();
    for (size_t a = 0; a < design.activations.size(); ++a) {
      const auto& act = design.activations[a];
      const Eigen::VectorXd x = tr.states.row(grid.node_of_time(act.time)).transpose();
      h(a) = spec.model->observe(act.sensor, std::span<const double>(x.data(), nx));
    }
    return h;
  }

  std::pair<Eigen::VectorXd, Eigen::MatrixXd> with_jacobian(const Eigen::VectorXd& theta) const {
    auto [tr, sens] = integrate_with_sensitivity(spec, design.u, theta, grid);
    const int nx = spec.state_dim(), np = spec.param_dim();
    const int A = static_cast<int>(design.activations.size());
    Eigen::VectorXd h(A);
    Eigen::MatrixXd J(A, np);
    std::vector<double> grad(nx);
    for (int a = 0; a < A; ++a) {
      const auto& act = design.activations[a];
      const int node = grid.node_of_time(act.time);
      const Eigen::VectorXd x = tr.states.row(node).transpose();
      std::span<const double> xs(x.data(), nx);
      h(a) = spec.model->observe(act.sensor, xs);
      spec.model->observe_gradient(act.sensor, xs, grad);
      J.row(a) = Eigen::Map<const Eigen::RowVectorXd>(grad.data(), nx) * sens.G[node];
    }
    return {h, J};
  }
};

// Search space of the fit: theta = phi on a box or unconstrained, or
// theta = exp(phi) for positive priors.
struct Chart {
  enum Kind { Box, Log, Free } kind = Free;
  Eigen::VectorXd lo, hi;

  Eigen::VectorXd theta(const Eigen::VectorXd& phi) const {
    Eigen::VectorXd t = kind == Log ? Eigen::VectorXd(phi.array().exp()) : phi;
    if (!t.allFinite()) throw NumericError("parameter left the representable range");
    return t;
  }
  Eigen::VectorXd phi(const Eigen::VectorXd& theta) const {
    return kind == Log ? Eigen::VectorXd(theta.array().log()) : project(theta);
  }
  Eigen::VectorXd project(const Eigen::VectorXd& phi) const {
    return kind == Box ? Eigen::VectorXd(phi.cwiseMax(lo).cwiseMin(hi)) : phi;
  }
};

Chart make_chart(const PriorSpec& prior) {
  Chart c;
  if (const auto* box = std::get_if<UniformBoxPrior>(&prior)) {
    c.kind = Chart::Box;
    c.lo = box->lower;
    c.hi = box->upper;
  } else if (prior_is_positive(prior)) {
    c.kind = Chart::Log;
  }
  return c;
}

struct FitProblem {
  const Predictor& model;
  const Chart& chart;
  Eigen::VectorXd y, inv_sigma;

  double objective(const Eigen::VectorXd& phi) const {
    const Eigen::VectorXd r = (y - model.values(chart.theta(phi))).cwiseProduct(inv_sigma);
    const double f = 0.5 * r.squaredNorm();
    if (!std::isfinite(f)) throw NumericError("non-finite residual");
    return f;
  }

  // residuals and their phi-Jacobian
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> linearize(const Eigen::VectorXd& phi) const {
    const Eigen::VectorXd theta = chart.theta(phi);
    auto [h, J] = model.with_jacobian(theta);
    Eigen::VectorXd r = (y - h).cwiseProduct(inv_sigma);
    Eigen::MatrixXd Jr = -(inv_sigma.asDiagonal() * J);
    if (chart.kind == Chart::Log) Jr = Jr * theta.asDiagonal();
    if (!r.allFinite() || !Jr.allFinite()) throw NumericError("non-finite residual");
    return {r, Jr};
  }
};

struct LocalFit {
  Eigen::VectorXd phi;
  double f = std::numeric_limits<double>::infinity();
};

LocalFit levenberg_marquardt(const FitProblem& p, Eigen::VectorXd phi,
                             const MleOptions& opts) {
  phi = p.chart.project(phi);
  auto [r, J] = p.linearize(phi);
  double f = 0.5 * r.squaredNorm();
  double lambda = 1e-3;
  const int n = static_cast<int>(phi.size());
  for (int it = 0; it < opts.max_iters && f > 0.0; ++it) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    const double scale = std::max(JtJ.diagonal().maxCoeff(), 1e-300);
    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd A = JtJ;
      for (int i = 0; i < n; ++i)
        A(i, i) += lambda * std::max(JtJ(i, i), 1e-12 * scale);
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      const Eigen::VectorXd trial = p.chart.project(phi + step);
      if ((trial - phi).norm() <= 1e-15 * (1.0 + phi.norm())) break;
      double ft = std::numeric_limits<double>::infinity();
      try {
        ft = p.objective(trial);
      } catch (const IntegrationError&) {
      } catch (const NumericError&) {
      }
      if (ft < f) {
        const double decrease = f - ft;
        phi = trial;
        std::tie(r, J) = p.linearize(phi);
        const double prev = f;
        f = 0.5 * r.squaredNorm();
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = decrease > opts.rel_tol * prev;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
  }
  return {phi, f};
}

LocalFit nelder_mead(const FitProblem& p, Eigen::VectorXd phi, const MleOptions& opts) {
  const int n = static_cast<int>(phi.size());
  auto eval = [&](const Eigen::VectorXd& x) {
    try {
      return p.objective(x);
    } catch (const IntegrationError&) {
    } catch (const NumericError&) {
    }
    return std::numeric_limits<double>::infinity();
  };
  std::vector<Eigen::VectorXd> x(n + 1, p.chart.project(phi));
  for (int i = 0; i < n; ++i) {
    x[i + 1](i) += 0.05 * (p.chart.kind == Chart::Log ? 1.0 : 1.0 + std::abs(phi(i)));
    x[i + 1] = p.chart.project(x[i + 1]);
  }
  std::vector<double> f(n + 1);
  for (int i = 0; i <= n; ++i) f[i] = eval(x[i]);
  std::vector<int> order(n + 1);
  for (int it = 0; it < opts.max_iters * n; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
    const int best = order.front(), worst = order.back(), second = order[n - 1];
    if (std::isfinite(f[worst]) &&
        f[worst] - f[best] <= opts.rel_tol * (std::abs(f[best]) + 1e-300))
      break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += x[i];
    centroid /= n;
    const Eigen::VectorXd xr = p.chart.project(centroid + (centroid - x[worst]));
    const double fr = eval(xr);
    if (fr < f[best]) {
      const Eigen::VectorXd xe = p.chart.project(centroid + 2.0 * (centroid - x[worst]));
      const double fe = eval(xe);
      if (fe < fr) {
        x[worst] = xe;
        f[worst] = fe;
      } else {
        x[worst] = xr;
        f[worst] = fr;
      }
    } else if (fr < f[second]) {
      x[worst] = xr;
      f[worst] = fr;
    } else {
      const Eigen::VectorXd xc = p.chart.project(centroid + 0.5 * (x[worst] - centroid));
      const double fc = eval(xc);
      if (fc < f[worst]) {
        x[worst] = xc;
        f[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i)
          if (i != best) {
            x[i] = p.chart.project(x[best] + 0.5 * (x[i] - x[best]));
            f[i] = eval(x[i]);
          }
      }
    }
  }
  const int best = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
  return {x[best], f[best]};
}

}  // namespace

Dataset simulate_data(const ProblemSpec& spec, const DiscreteDesign& design,
                      const Eigen::VectorXd& theta_true, std::uint64_t seed) {
  std::string why;
  if (!is_feasible(design, spec, &why)) throw ArgumentError("infeasible design: " + why);
  if (theta_true.size() != spec.param_dim())
    throw ArgumentError("parameter vector has the wrong length");
  const Eigen::VectorXd h = Predictor(spec, design).values(theta_true);
  std::mt19937_64 rng = stream(seed, 0, 0x6e6f6973);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data;
  data.theta_true = theta_true;
  data.seed = seed;
  for (size_t a = 0; a < design.activations.size(); ++a) {
    const auto& act = design.activations[a];
    data.records.push_back(
        {act.time, act.sensor, act.cell, h(a) + spec.noise.sigma[act.sensor] * normal(rng)});
  }
  return data;
}

MleResult mle_fit(const ProblemSpec& spec, const DiscreteDesign& design,
                  const Dataset& data, const PriorSpec& prior,
                  const ParticleCloud& cloud, const MleOptions& opts) {
  if (data.records.empty()) throw ArgumentError("no observations to fit");
  if (data.records.size() != design.activations.size())
    throw ArgumentError("dataset does not match the design");
  if (cloud.size() < 1 || cloud.dim() != spec.param_dim())
    throw ArgumentError("prior cloud does not match the model");
  const Predictor model(spec, design);
  const Chart chart = make_chart(prior);
  const int A = static_cast<int>(data.records.size());
  FitProblem problem{model, chart, Eigen::VectorXd(A), Eigen::VectorXd(A)};
  for (int a = 0; a < A; ++a) {
    problem.y(a) = data.records[a].value;
    problem.inv_sigma(a) = 1.0 / spec.noise.sigma[data.records[a].sensor];
  }

  std::vector<int> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return cloud.masses(a) > cloud.masses(b); });
  std::vector<Eigen::VectorXd> starts;
  for (int i = 0; i < std::min<int>(opts.top_atoms, cloud.size()); ++i)
    starts.push_back(cloud.atoms.row(idx[i]).transpose());
  starts.push_back(cloud.mean);

  std::vector<LocalFit> fits(starts.size());
  for (size_t s = 0; s < starts.size(); ++s) {
    const Eigen::VectorXd phi0 = chart.phi(starts[s]);
    try {
      fits[s] = levenberg_marquardt(problem, phi0, opts);
    } catch (const IntegrationError&) {
    } catch (const NumericError&) {
    }
    if (!std::isfinite(fits[s].f)) fits[s] = nelder_mead(problem, phi0, opts);
  }
  MleResult out;
  out.theta = Eigen::VectorXd::Constant(spec.param_dim(), kNaN);
  out.objective = kNaN;
  for (size_t s = 0; s < fits.size(); ++s) {
    if (!std::isfinite(fits[s].f)) continue;
    if (out.best_start < 0 || fits[s].f < fits[out.best_start].f)
      out.best_start = static_cast<int>(s);
  }
  if (out.best_start >= 0) {
    out.theta = chart.theta(fits[out.best_start].phi);
    out.objective = fits[out.best_start].f;
    out.ok = out.theta.allFinite();
  }
  return out;
}

std::vector<double> EvalReport::errors(const std::string& method) const {
  std::vector<double> e;
  for (const auto& r : rows)
    if (r.method == method) e.push_back(r.ok ? r.err_l2 : kNaN);
  return e;
}

double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }),
          v.end());
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<MethodSummary> EvalReport::summary() const {
  std::vector<MethodSummary> out;
  for (const auto& m : methods) {
    MethodSummary s{m};
    std::vector<double> e;
    for (const auto& r : rows) {
      if (r.method != m) continue;
      if (r.ok) {
        ++s.completed;
        e.push_back(r.err_l2);
      } else {
        ++s.failed;
      }
    }
    s.median_l2 = median(e);
    s.mean_l2 = e.empty() ? kNaN : std::accumulate(e.begin(), e.end(), 0.0) / e.size();
    out.push_back(s);
  }
  return out;
}

EvalReport mc_evaluate(const ProblemSpec& spec,
                       const std::vector<std::pair<std::string, DiscreteDesign>>& designs,
                       const PriorSpec& prior, const ParticleCloud& cloud,
                       int runs, std::uint64_t seed, const MleOptions& opts) {
  if (runs < 1) throw ArgumentError("runs must be >= 1");
  if (designs.empty()) throw ArgumentError("no designs to evaluate");
  if (prior_dim(prior) != spec.param_dim())
    throw ArgumentError("prior dimension does not match the model");
  for (const auto& [name, d] : designs) {
    std::string why;
    if (!is_feasible(d, spec, &why))
      throw ArgumentError("design '" + name + "' is infeasible: " + why);
    if (d.activations.empty())
      throw ArgumentError("design '" + name + "' has no activations");
  }
  const int M = static_cast<int>(designs.size());
  EvalReport report;
  report.dim = spec.param_dim();
  for (const auto& d : designs) report.methods.push_back(d.first);
  report.rows.resize(static_cast<size_t>(runs) * M);

  parallel_for(runs, [&](int r) {
    std::mt19937_64 rng = stream(seed, static_cast<std::uint64_t>(r), 0x72756e);
    const Eigen::VectorXd theta = sample_prior(prior, rng);
    const std::uint64_t noise_seed = rng();
    for (int m = 0; m < M; ++m) {
      EvalRow& row = report.rows[static_cast<size_t>(r) * M + m];
      row.method = designs[m].first;
      row.run = r;
      row.theta_true = theta;
      row.theta_hat = Eigen::VectorXd::Constant(theta.size(), kNaN);
      row.ok = false;
      try {
        const Dataset data = simulate_data(spec, designs[m].second, theta, noise_seed);
        const MleResult fit = mle_fit(spec, designs[m].second, data, prior, cloud, opts);
        row.theta_hat = fit.theta;
        row.ok = fit.ok;
      } catch (const IntegrationError&) {
      } catch (const NumericError&) {
      }
      row.err = (row.theta_hat - theta).cwiseAbs();
      row.err_l2 = row.ok ? row.err.norm() : kNaN;
    }
  });
  return report;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& s, int line) {
  if (s == "nan") return kNaN;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0')
    throw ParseError("line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool same_value(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!same_value(a(i), b(i))) return false;
  return true;
}

}  // namespace

void write_csv(const EvalReport& report, std::ostream& out) {
  const int n = report.dim;
  out << "method,run";
  for (const char* p : {"theta_true_", "theta_hat_", "err_"})
    for (int i = 1; i <= n; ++i) out << ',' << p << i;
  out << ",err_l2,status\n";
  for (const auto& r : report.rows) {
    out << r.method << ',' << r.run;
    for (const Eigen::VectorXd* v : {&r.theta_true, &r.theta_hat, &r.err})
      for (int i = 0; i < n; ++i) out << ',' << fmt((*v)(i));
    out << ',' << fmt(r.err_l2) << ',' << (r.ok ? "ok" : "failed") << '\n';
  }
}

EvalReport read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty report");
  // skip comment header lines
  while (!line.empty() && line[0] == '#')
    if (!std::getline(in, line)) throw ParseError("report has no header row");
  const auto head = split(line);
  if (head.size() < 4 || head[0] != "method" || head[1] != "run" ||
      (head.size() - 4) % 3 != 0 || head[head.size() - 2] != "err_l2" ||
      head.back() != "status")
    throw ParseError("unexpected report header");
  EvalReport rep;
  rep.dim = static_cast<int>((head.size() - 4) / 3);
  const int n = rep.dim;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != head.size())
      throw ParseError("line " + std::to_string(lineno) + ": wrong number of fields");
    EvalRow r;
    r.method = f[0];
    r.run = static_cast<int>(parse_number(f[1], lineno));
    r.theta_true.resize(n);
    r.theta_hat.resize(n);
    r.err.resize(n);
    for (int i = 0; i < n; ++i) {
      r.theta_true(i) = parse_number(f[2 + i], lineno);
      r.theta_hat(i) = parse_number(f[2 + n + i], lineno);
      r.err(i) = parse_number(f[2 + 2 * n + i], lineno);
    }
    r.err_l2 = parse_number(f[2 + 3 * n], lineno);
    if (f.back() != "ok" && f.back() != "failed")
      throw ParseError("line " + std::to_string(lineno) + ": bad status '" + f.back() + "'");
    r.ok = f.back() == "ok";
    if (std::find(rep.methods.begin(), rep.methods.end(), r.method) == rep.methods.end())
      rep.methods.push_back(r.method);
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

bool same_report(const EvalReport& a, const EvalReport& b) {
  if (a.dim != b.dim || a.methods != b.methods || a.rows.size() != b.rows.size())
    return false;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    const EvalRow &x = a.rows[i], &y = b.rows[i];
    if (x.method != y.method || x.run != y.run || x.ok != y.ok ||
        !same_vector(x.theta_true, y.theta_true) || !same_vector(x.theta_hat, y.theta_hat) ||
        !same_vector(x.err, y.err) || !same_value(x.err_l2, y.err_l2))
      return false;
  }
  return true;
}

SignTest sign_test(const EvalReport& report, const std::string& a,
                   const std::string& b) {
  const std::vector<double> ea = report.errors(a), eb = report.errors(b);
  if (ea.empty() || eb.empty()) throw ArgumentError("unknown method in sign test");
  SignTest t;
  for (size_t i = 0; i < ea.size() && i < eb.size(); ++i) {
    if (std::isnan(ea[i]) || std::isnan(eb[i])) continue;
    if (ea[i] < eb[i])
      ++t.wins;
    else if (ea[i] > eb[i])
      ++t.losses;
    else
      ++t.ties;
  }
  const int n = t.wins + t.losses, k = std::min(t.wins, t.losses);
  if (n == 0) return t;
  // P(X <= k) for X ~ Bin(n, 1/2), summed in the log domain
  double tail = 0.0;
  for (int i = 0; i <= k; ++i)
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                     std::lgamma(n - i + 1.0) - n * std::log(2.0));
  t.p_value = std::min(1.0, 2.0 * tail);
  return t;
}

}  // namespace oed
