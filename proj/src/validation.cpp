#include "oed/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "oed/error.hpp"
#include "oed/evaluate.hpp"
#include "oed/models.hpp"
#include "oed/oracle.hpp"

namespace oed {

Suite parse_suite(const std::string& name) {
  if (name == "oracle") return Suite::Oracle;
  if (name == "gradients") return Suite::Gradients;
  if (name == "benchmarks") return Suite::Benchmarks;
  throw ArgumentError("unknown suite '" + name +
                      "' (expected oracle, gradients or benchmarks)");
}

std::string suite_name(Suite s) {
  switch (s) {
    case Suite::Oracle: return "oracle";
    case Suite::Gradients: return "gradients";
    case Suite::Benchmarks: return "benchmarks";
  }
  return "";
}

std::vector<int> suite_checks(Suite s) {
  switch (s) {
    case Suite::Oracle: return {1, 2, 3, 4, 5};
    case Suite::Gradients: return {6, 7, 8};
    case Suite::Benchmarks: return {9, 10, 11, 12};
  }
  return {};
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::mt19937_64 check_stream(std::uint64_t seed, int id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id), 0x76616cu};
  return std::mt19937_64(seq);
}

// Random design strictly inside the feasible set: controls away from the box
// faces, weights in (0, 1) with total at most 0.9 K.
Eigen::VectorXd interior_design(const ProblemSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RelaxedDesign d;
  d.u.resize(spec.control_intervals, spec.control_dim());
  for (int i = 0; i < d.u.rows(); ++i)
    for (int j = 0; j < d.u.cols(); ++j) {
      const double lo = spec.control_lower(j), hi = spec.control_upper(j);
      d.u(i, j) = lo + (0.05 + 0.9 * unit(rng)) * (hi - lo);
    }
  d.w.resize(spec.weight_cells, spec.sensor_count());
  for (int i = 0; i < d.w.rows(); ++i)
    for (int j = 0; j < d.w.cols(); ++j) d.w(i, j) = 0.05 + 0.9 * unit(rng);
  const double cap = 0.9 * spec.budget;
  if (d.w.sum() > cap) d.w *= cap / d.w.sum();
  return pack_design(d);
}

RelaxedDesign start_design(const ProblemSpec& spec) {
  RelaxedDesign d;
  d.u = ((spec.control_lower + spec.control_upper) / 2)
            .transpose()
            .replicate(spec.control_intervals, 1);
  d.w = Eigen::MatrixXd::Constant(
      spec.weight_cells, spec.sensor_count(),
      std::min(1.0, double(spec.budget) / spec.weight_vars()));
  return d;
}

struct BenchmarkRun {
  std::vector<std::pair<std::string, DiscreteDesign>> designs;
  EvalReport report;
  std::string csv;
};

BenchmarkRun run_benchmark(const std::string& name, const std::string& scenario,
                           const ValidationOptions& opts) {
  ProblemSetup setup = benchmark_setup(name, scenario);
  DesignProblem problem = make_design_problem(setup);
  OptimizerOptions o;
  o.restarts = opts.restarts;
  o.seed = opts.seed;
  BenchmarkRun run;
  for (Criterion c : all_criteria())
    run.designs.emplace_back(criterion_name(c),
                             design_and_round(problem, c, o).design);
  run.report = mc_evaluate(problem.spec, run.designs, setup.prior.prior,
                           problem.prior, opts.runs, opts.seed);
  std::ostringstream csv;
  write_csv(run.report, csv);
  run.csv = csv.str();
  return run;
}

const DiscreteDesign& design_of(const BenchmarkRun& run, const std::string& m) {
  for (const auto& [name, d] : run.designs)
    if (name == m) return d;
  throw ArgumentError("no design for " + m);
}

std::string activation_list(const DiscreteDesign& d) {
  std::string s;
  for (const auto& a : d.activations)
    s += (s.empty() ? "" : " ") + num(a.time) + "/" + std::to_string(a.sensor + 1);
  return s;
}

std::map<std::string, double> medians(const EvalReport& r) {
  std::map<std::string, double> m;
  for (const auto& s : r.summary()) m[s.method] = s.median_l2;
  return m;
}

std::string median_line(const EvalReport& r) {
  std::string s = "median error:";
  for (const auto& m : r.summary())
    s += " " + m.method + " " + num(m.median_l2) +
         (m.failed ? " (" + std::to_string(m.failed) + " failed)" : "");
  return s;
}

const std::vector<std::string> kEigMethods = {"inst", "tilt", "multi_tilt"};

class Runner {
 public:
  explicit Runner(const ValidationOptions& opts) : opts_(opts) {}

  void run(int id, CheckResult& r) {
    switch (id) {
      case 1: lg_exactness(r); break;
      case 2: redundancy(r); break;
      case 3: bounds(r); break;
      case 4: tilt_convergence(r); break;
      case 5: entropy(r); break;
      case 6: gradients(r); break;
      case 7: replicator(r); break;
      case 8: bang_bang(r); break;
      case 9: uneven(r); break;
      case 10: mixture(r); break;
      case 11: similar(r); break;
      case 12: determinism(r); break;
      default: throw ArgumentError("unknown check " + std::to_string(id));
    }
  }

 private:
  void lg_exactness(CheckResult& r) {
    r.title = "linear-Gaussian tilt equals the closed-form EIG";
    r.time_limit = 1;
    auto rng = check_stream(opts_.seed, 1);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      LinearGaussianModel m = random_lg_model(1 + i % 3, 1 + i % 5, rng);
      worst = std::max(worst, std::abs(lg_tilt_exact(m) - lg_eig_closed_form(m).total));
    }
    r.passed = worst <= 1e-10;
    r.details.push_back("20 instances, max |tilt - eig| = " + num(worst) + " (tol 1e-10)");
  }

  std::vector<MiReport> discrete_reports() {
    auto rng = check_stream(opts_.seed, 2);
    std::vector<MiReport> out;
    for (int i = 0; i < 100; ++i)
      out.push_back(enumerate_mi(random_discrete_model(4, 3, 3, rng)));
    return out;
  }

  void redundancy(CheckResult& r) {
    r.title = "redundancy identity inst term = conditional term + gap";
    r.time_limit = 10;
    double worst = 0.0;
    for (const MiReport& m : discrete_reports()) {
      worst = std::max(worst, (m.instantaneous - m.conditional - m.gaps).cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(m.eig - m.conditional.sum()));
    }
    r.passed = worst <= 1e-12;
    r.details.push_back("100 models, max residual = " + num(worst) + " (tol 1e-12)");
  }

  void bounds(CheckResult& r) {
    r.title = "inst / K_time <= EIG <= inst";
    r.time_limit = 10;
    double slack = 1e300;
    for (const MiReport& m : discrete_reports()) {
      slack = std::min(slack, m.inst - m.eig);
      slack = std::min(slack, m.eig - m.inst / m.k_time);
    }
    r.passed = slack >= -1e-12;
    r.details.push_back("100 models, min slack = " + num(slack) + " (tol -1e-12)");
  }

  void tilt_convergence(CheckResult& r) {
    r.title = "particle tilt converges to the closed form";
    r.time_limit = 5;
    ScalarLgBenchmark b = scalar_lg_benchmark();
    const double closed = lg_eig_closed_form(b.model).total;
    bool monotone = true;
    double prev = 1e300, err = 0.0;
    std::string line = "relative error by order:";
    for (int n : {2, 5, 10, 20}) {
      err = std::abs(scalar_lg_particle_tilt(b, n) - closed) / closed;
      monotone = monotone && err <= prev;
      prev = err;
      line += " " + std::to_string(n) + ":" + num(err);
    }
    r.passed = monotone && err <= 1e-3;
    r.details.push_back(line);
    r.details.push_back(std::string("non-increasing: ") + (monotone ? "yes" : "no") +
                        ", order 20 tol 1e-3");
  }

  void entropy(CheckResult& r) {
    r.title = "masked-observation entropy decomposition";
    r.time_limit = 30;
    const NoiseSpec noise = benchmark_model("harmonic", "similar").noise;
    const Eigen::Vector2d w(0.3, 0.8);
    McEstimate e = mc_conditional_entropy(w, noise, 1000000, opts_.seed);
    const double exact = relaxed_conditional_entropy(w, noise);
    r.passed = std::abs(e.estimate - exact) <= 3 * e.std_error;
    r.details.push_back("MC " + num(e.estimate) + " +- " + num(e.std_error) +
                        ", formula " + num(exact));
  }

  void gradients(CheckResult& r) {
    r.title = "objective gradients match central differences";
    r.time_limit = 300;
    const double h = 1e-6;
    auto rng = check_stream(opts_.seed, 6);
    std::normal_distribution<double> normal;
    bool ok = true;
    for (auto [name, scenario] : {std::pair{"harmonic", "similar"},
                                  std::pair{"lotka_volterra", "mixture"}}) {
      DesignProblem p = make_design_problem(benchmark_setup(name, scenario));
      const int nu = p.spec.control_vars(), n = nu + p.spec.weight_vars();
      std::map<Criterion, double> worst;
      for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd z = interior_design(p.spec, rng);
        // one direction in the controls, one in the weights, one in both
        std::vector<Eigen::VectorXd> dirs;
        for (int k = 0; k < 3; ++k) {
          Eigen::VectorXd v(n);
          for (int i = 0; i < n; ++i) v(i) = normal(rng);
          if (k == 0) v.tail(n - nu).setZero();
          if (k == 1) v.head(nu).setZero();
          dirs.push_back(v.normalized());
        }
        for (Criterion c : all_criteria()) {
          const ObjectiveEval e = objective_and_gradient(p, c, z, true);
          for (const auto& v : dirs) {
            const double fp = objective_and_gradient(p, c, z + h * v, false).value;
            const double fm = objective_and_gradient(p, c, z - h * v, false).value;
            const double fd = (fp - fm) / (2 * h);
            const double ad = e.gradient.dot(v);
            const double rel = std::abs(fd - ad) / std::max({std::abs(ad), std::abs(fd), 1e-300});
            worst[c] = std::max(worst[c], rel);
          }
        }
      }
      std::string line = std::string(name) + " " + scenario + ", max relative error:";
      for (auto [c, v] : worst) {
        line += " " + criterion_name(c) + " " + num(v);
        ok = ok && v <= 1e-5;
      }
      r.details.push_back(line);
    }
    r.details.push_back("5 designs x 3 directions, step 1e-6, tol 1e-5");
    r.passed = ok;
  }

  void replicator(CheckResult& r) {
    r.title = "tilted masses stay on the simplex and solve the replicator equation";
    r.time_limit = 60;
    auto rng = check_stream(opts_.seed, 7);
    double sum_err = 0.0, min_mass = 1e300, rk_err = 0.0;
    int paths = 0;
    for (auto [name, scenario] : {std::pair{"harmonic", "similar"},
                                  std::pair{"harmonic", "uneven"},
                                  std::pair{"lotka_volterra", "lognormal"},
                                  std::pair{"lotka_volterra", "mixture"}}) {
      DesignProblem p = make_design_problem(benchmark_setup(name, scenario));
      std::vector<RelaxedDesign> designs = {start_design(p.spec)};
      for (int i = 0; i < 2; ++i)
        designs.push_back(unpack_design(interior_design(p.spec, rng), p.spec));
      for (const auto& d : designs)
        for (const auto& centers : {mean_center(p.prior), cloud_centers(p.centers)}) {
          TiltPath path = tilt_weight_path(d, p.prior, p.spec, centers);
          sum_err = std::max(sum_err, (path.mu.rowwise().sum().array() - 1.0).abs().maxCoeff());
          min_mass = std::min(min_mass, path.mu.minCoeff());
          Eigen::MatrixXd rk = replicator_rk4(p.prior, centers, path.fisher, p.spec);
          rk_err = std::max(rk_err, (rk - path.mu).cwiseAbs().maxCoeff());
          ++paths;
        }
    }
    r.passed = sum_err <= 1e-9 && min_mass >= -1e-12 && rk_err <= 1e-6;
    r.details.push_back(std::to_string(paths) + " paths: max |sum mu - 1| = " + num(sum_err) +
                        ", min mu = " + num(min_mass) + ", max |RK4 - closed form| = " +
                        num(rk_err));
  }

  void bang_bang(CheckResult& r) {
    r.title = "sampling weights are bang-bang on the 6-cell toy";
    r.time_limit = 60;
    ProblemSpec spec;
    spec.model = make_model("linear_drift", {1});
    spec.horizon = 3;
    spec.x0 = Eigen::VectorXd::Zero(1);
    spec.control_lower = Eigen::VectorXd::Zero(1);
    spec.control_upper = Eigen::VectorXd::Ones(1);
    spec.control_intervals = 1;
    spec.weight_cells = 6;
    spec.steps_per_cell = 2;
    spec.noise = NoiseSpec{{0.5}, {5}};
    spec.budget = 6;
    ProblemSetup setup{spec, PriorSetup{GaussianPrior{Eigen::VectorXd::Ones(1),
                                                      Eigen::MatrixXd::Identity(1, 1)},
                                        {8}, {2}}};
    DesignProblem p = make_design_problem(setup);
    OptimizerOptions o;
    o.restarts = 2;
    o.seed = opts_.seed;
    OptimizeResult res = optimize(p, Criterion::Inst, o);
    double best = 1e300;
    Eigen::VectorXd best_w;
    for (unsigned mask = 0; mask < 64; ++mask) {
      RelaxedDesign v{res.design.u, Eigen::MatrixXd::Zero(6, 1)};
      for (int c = 0; c < 6; ++c) v.w(c, 0) = (mask >> c & 1) ? 1.0 : 0.0;
      const double val = inst_objective(v, p.prior, p.spec, false).value;
      if (val < best) {
        best = val;
        best_w = v.w.col(0);
      }
    }
    const double dist = (res.design.w.col(0) - best_w).cwiseAbs().maxCoeff();
    r.passed = dist <= 1e-3;
    std::string w;
    for (int c = 0; c < 6; ++c) w += " " + num(res.design.w(c, 0));
    r.details.push_back("weights" + w + ", distance to best of 64 vertices " + num(dist) +
                        " (tol 1e-3)");
  }

  const BenchmarkRun& cached(int id) {
    auto it = runs_.find(id);
    if (it != runs_.end()) return it->second;
    return runs_[id] = fresh(id);
  }

  BenchmarkRun fresh(int id) {
    if (id == 9) return run_benchmark("harmonic", "uneven", opts_);
    if (id == 10) return run_benchmark("lotka_volterra", "mixture", opts_);
    return run_benchmark("harmonic", "similar", opts_);
  }

  void uneven(CheckResult& r) {
    r.title = "harmonic uneven: inst uses sensor 1 only, tilting designs use sensor 2";
    r.time_limit = 900;
    const BenchmarkRun& run = cached(9);
    const DiscreteDesign& inst = design_of(run, "inst");
    bool ok = inst.count(0) == 8 && inst.count(1) == 0;
    for (const char* m : {"tilt", "multi_tilt"})
      ok = ok && design_of(run, m).count(1) >= 1;
    for (const auto& m : kEigMethods) {
      const DiscreteDesign& d = design_of(run, m);
      r.details.push_back(m + ": sensor 1 x" + std::to_string(d.count(0)) + ", sensor 2 x" +
                          std::to_string(d.count(1)) + " at " + activation_list(d));
    }
    r.details.push_back(median_line(run.report));
    r.passed = ok;
  }

  void mixture(CheckResult& r) {
    r.title = "Lotka-Volterra mixture: EIG designs beat A and D, multi_tilt vs d_opt significant";
    r.time_limit = 2700;
    const BenchmarkRun& run = cached(10);
    auto med = medians(run.report);
    const double fisher = std::min(med["a_opt"], med["d_opt"]);
    bool ok = true;
    for (const auto& m : kEigMethods) ok = ok && med[m] < fisher;
    SignTest s = sign_test(run.report, "multi_tilt", "d_opt");
    ok = ok && s.p_value < 0.05;
    r.details.push_back(median_line(run.report));
    r.details.push_back("sign test multi_tilt vs d_opt: " + std::to_string(s.wins) + "-" +
                        std::to_string(s.losses) + " (" + std::to_string(s.ties) +
                        " ties), p = " + num(s.p_value));
    r.passed = ok;
  }

  void similar(CheckResult& r) {
    r.title = "harmonic similar: EIG designs within 10% of the best, multi_tilt lowest";
    r.time_limit = 900;
    const BenchmarkRun& run = cached(11);
    auto med = medians(run.report);
    double best = 1e300;
    for (auto [m, v] : med) best = std::min(best, v);
    bool ok = med["multi_tilt"] <= best;
    for (const auto& m : kEigMethods) ok = ok && med[m] <= 1.1 * best;
    r.details.push_back(median_line(run.report));
    r.details.push_back("best " + num(best) + ", limit " + num(1.1 * best));
    r.passed = ok;
  }

  void determinism(CheckResult& r) {
    r.title = "benchmark CSVs are byte-identical on rerun";
    bool ok = true;
    for (int id : {9, 10, 11}) {
      const std::string first = cached(id).csv;
      const bool same = fresh(id).csv == first;
      ok = ok && same;
      r.details.push_back("check " + std::to_string(id) + ": " +
                          std::to_string(first.size()) + " bytes, " +
                          (same ? "identical" : "DIFFERENT"));
    }
    r.passed = ok;
  }

  ValidationOptions opts_;
  std::map<int, BenchmarkRun> runs_;
};

}  // namespace

std::vector<CheckResult> run_checks(
    const std::vector<int>& ids, const ValidationOptions& opts,
    const std::function<void(const CheckResult&)>& progress) {
  Runner runner(opts);
  std::vector<CheckResult> results;
  for (int id : ids) {
    CheckResult r;
    r.id = id;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      runner.run(id, r);
    } catch (const Error& e) {
      r.passed = false;
      r.details.push_back(std::string("error: ") + e.what());
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.time_limit > 0 && r.seconds > r.time_limit) {
      r.passed = false;
      r.details.push_back("exceeded the time limit of " + num(r.time_limit) + " s");
    }
    if (progress) progress(r);
    results.push_back(std::move(r));
  }
  return results;
}

void print_result_line(const CheckResult& r, std::ostream& out) {
  char head[64];
  std::snprintf(head, sizeof head, "[%2d] %s %8.2fs  ", r.id, r.passed ? "PASS" : "FAIL",
                r.seconds);
  out << head << r.title << '\n';
  for (const auto& d : r.details) out << "       " << d << '\n';
}

void print_summary(const std::vector<CheckResult>& results, std::ostream& out) {
  int passed = 0;
  out << "check  result  seconds\n";
  for (const auto& r : results) {
    char line[64];
    std::snprintf(line, sizeof line, "%5d  %-6s  %7.2f\n", r.id, r.passed ? "pass" : "FAIL",
                  r.seconds);
    out << line;
    passed += r.passed;
  }
  out << passed << " of " << results.size() << " checks passed\n";
}

}  // namespace oed
