#include "oed/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "oed/error.hpp"
#include "oed/parallel.hpp"

namespace oed {

std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::AOpt: return "a_opt";
    case Criterion::DOpt: return "d_opt";
    case Criterion::Inst: return "inst";
    case Criterion::Tilt: return "tilt";
    case Criterion::MultiTilt: return "multi_tilt";
  }
  return "unknown";
}

Criterion parse_criterion(const std::string& name) {
  for (Criterion c : all_criteria())
    if (criterion_name(c) == name) return c;
  throw ArgumentError("unknown criterion '" + name +
                      "' (expected a_opt, d_opt, inst, tilt or multi_tilt)");
}

const std::vector<Criterion>& all_criteria() {
  static const std::vector<Criterion> all = {Criterion::AOpt, Criterion::DOpt,
                                             Criterion::Inst, Criterion::Tilt,
                                             Criterion::MultiTilt};
  return all;
}

DesignProblem make_design_problem(const ProblemSetup& setup) {
  validate(setup.problem);
  DesignProblem p;
  p.spec = setup.problem;
  p.prior = build_prior(setup.prior.prior, setup.prior.orders);
  p.centers = build_prior(setup.prior.prior, setup.prior.center_orders);
  p.nominal = p.prior.mean;
  if (p.prior.dim() != p.spec.param_dim())
    throw ConfigurationError("prior dimension does not match the model");
  return p;
}

ObjectiveEval objective_and_gradient(const DesignProblem& problem,
                                     Criterion criterion,
                                     const Eigen::VectorXd& z,
                                     bool with_gradient) {
  const RelaxedDesign d =
      unpack_design(project_feasible(z, problem.spec), problem.spec);
  switch (criterion) {
    case Criterion::AOpt:
      return fisher_objective(d, problem.nominal, problem.spec,
                              FisherCriterion::A, with_gradient);
    case Criterion::DOpt:
      return fisher_objective(d, problem.nominal, problem.spec,
                              FisherCriterion::D, with_gradient);
    case Criterion::Inst:
      return inst_objective(d, problem.prior, problem.spec, with_gradient);
    case Criterion::Tilt:
      return tilt_objective(d, problem.prior, problem.spec,
                            mean_center(problem.prior), with_gradient);
    case Criterion::MultiTilt:
      return tilt_objective(d, problem.prior, problem.spec,
                            cloud_centers(problem.centers), with_gradient);
  }
  throw ArgumentError("unknown criterion");
}

Eigen::VectorXd project_capped(const Eigen::VectorXd& w, double budget,
                               double lo, double hi) {
  Eigen::VectorXd out = w.cwiseMax(lo).cwiseMin(hi);
  if (out.sum() <= budget) return out;
  // sum(clip(w - tau)) is non-increasing in tau; find the smallest feasible
  // shift.
  double a = 0.0, b = w.maxCoeff() - lo;
  for (int it = 0; it < 200 && b - a > 0.0; ++it) {
    double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if ((w.array() - mid).max(lo).min(hi).sum() > budget)
      a = mid;
    else
      b = mid;
  }
  return (w.array() - b).max(lo).min(hi).matrix();
}

Eigen::VectorXd project_capped(const Eigen::VectorXd& w, double budget,
                               const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi) {
  if (lo.size() != w.size() || hi.size() != w.size())
    throw ArgumentError("weight bounds have the wrong length");
  auto clip = [&](double tau) -> Eigen::VectorXd {
    return (w.array() - tau).max(lo.array()).min(hi.array()).matrix();
  };
  Eigen::VectorXd out = clip(0.0);
  if (out.sum() <= budget) return out;
  double a = 0.0, b = (w - lo).maxCoeff();
  for (int it = 0; it < 200 && b - a > 0.0; ++it) {
    double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (clip(mid).sum() > budget)
      a = mid;
    else
      b = mid;
  }
  return clip(b);
}

Eigen::VectorXd project_feasible(const Eigen::VectorXd& z,
                                 const ProblemSpec& spec,
                                 const WeightBounds* bounds) {
  const int nu = spec.control_vars(), nw = spec.weight_vars();
  if (z.size() != nu + nw)
    throw ArgumentError("decision vector has the wrong length");
  if (!z.allFinite()) throw NumericError("decision vector is not finite");
  Eigen::VectorXd out(z.size());
  const int ncu = spec.control_dim();
  for (int i = 0; i < nu; ++i) {
    const int j = i % ncu;
    out(i) = std::clamp(z(i), spec.control_lower(j), spec.control_upper(j));
  }
  out.tail(nw) = bounds ? project_capped(z.tail(nw), spec.budget, bounds->lo, bounds->hi)
                       : project_capped(z.tail(nw), spec.budget);
  return out;
}

ProjectedGradientResult projected_gradient(const ObjectiveFunction& f,
                                           const Projection& project,
                                           const Eigen::VectorXd& z0,
                                           const OptimizerOptions& opts) {
  if (opts.max_iters < 1 || !(opts.rel_tol > 0) || !(opts.armijo_c > 0) ||
      !(opts.backtrack > 0 && opts.backtrack < 1) || opts.max_backtracks < 1)
    throw ArgumentError("invalid optimizer options");
  ProjectedGradientResult res;
  Eigen::VectorXd z = project(z0);
  ObjectiveEval e = f(z, true);
  double value = e.value;
  Eigen::VectorXd g = e.gradient;
  res.trace.values.push_back(value);

  auto pg_norm = [&] { return (project(z - g) - z).norm(); };
  double gmax = g.cwiseAbs().maxCoeff();
  double alpha = gmax > 0 ? 0.1 / gmax : 1.0;
  int quiet = 0;
  for (int it = 0; it < opts.max_iters; ++it) {
    res.trace.iterations = it + 1;
    if (pg_norm() == 0.0) {
      res.trace.converged = true;
      break;
    }
    double a = alpha;
    bool accepted = false;
    Eigen::VectorXd zt;
    ObjectiveEval et;
    double vt = 0.0;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, a *= opts.backtrack) {
      zt = project(z - a * g);
      const Eigen::VectorXd step = zt - z;
      if (step.cwiseAbs().maxCoeff() == 0.0) break;
      try {
        // The first trial carries the gradient, later ones only the value.
        et = f(zt, bt == 0);
        vt = et.value;
      } catch (const IntegrationError&) {
        continue;
      } catch (const NumericError&) {
        continue;
      }
      if (std::isfinite(vt) && vt <= value + opts.armijo_c * g.dot(step)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.trace.converged = true;
      break;
    }
    if (et.gradient.size() == 0) et.gradient = f(zt, true).gradient;
    const Eigen::VectorXd s = zt - z, y = et.gradient - g;
    const double sy = s.dot(y);
    alpha = sy > 0 ? s.squaredNorm() / sy : 4.0 * a;
    alpha = std::clamp(alpha, 1e-12, 1e12);

    const double decrease = value - vt;
    z = zt;
    g = et.gradient;
    res.trace.values.push_back(vt);
    const double prev = value;
    value = vt;
    // two consecutive small relative decreases end the run
    quiet = decrease <= opts.rel_tol * std::max(std::abs(prev), 1e-12) ? quiet + 1 : 0;
    if (quiet >= 2) {
      res.trace.converged = true;
      break;
    }
  }
  res.z = z;
  res.value = value;
  res.trace.projected_gradient_norm = pg_norm();
  return res;
}

OptimizeResult optimize(const DesignProblem& problem, Criterion criterion,
                        const OptimizerOptions& opts,
                        const WeightBounds* bounds) {
  if (opts.restarts < 1) throw ArgumentError("restarts must be >= 1");
  const ProblemSpec& spec = problem.spec;
  validate(spec);
  const int nu = spec.control_vars(), nw = spec.weight_vars();
  const int ncu = spec.control_dim();

  std::vector<ProjectedGradientResult> results(opts.restarts);
  parallel_for(opts.restarts, [&](int r) {
    Eigen::VectorXd z0(nu + nw);
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed),
                      static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(-0.25, 0.25);
    for (int i = 0; i < nu; ++i) {
      const int j = i % ncu;
      const double lo = spec.control_lower(j), hi = spec.control_upper(j);
      z0(i) = 0.5 * (lo + hi) + (r > 0 ? unit(rng) * (hi - lo) : 0.0);
    }
    z0.tail(nw).setConstant(std::min(1.0, double(spec.budget) / nw));
    ObjectiveFunction f = [&](const Eigen::VectorXd& z, bool grad) {
      return objective_and_gradient(problem, criterion, z, grad);
    };
    Projection proj = [&](const Eigen::VectorXd& z) {
      return project_feasible(z, spec, bounds);
    };
    try {
      results[r] = projected_gradient(f, proj, z0, opts);
    } catch (const Error& e) {
      results[r].value = std::numeric_limits<double>::quiet_NaN();
      results[r].trace.failure = e.what();
    }
  });

  OptimizeResult out;
  int best = -1;
  for (int r = 0; r < opts.restarts; ++r) {
    out.restarts.push_back(results[r].trace);
    if (!results[r].trace.failure.empty() || !std::isfinite(results[r].value))
      continue;
    if (best < 0 || results[r].value < results[best].value) best = r;
  }
  if (best < 0) {
    std::string msg = "all " + std::to_string(opts.restarts) +
                      " starts failed for criterion " + criterion_name(criterion);
    for (int r = 0; r < opts.restarts; ++r)
      msg += "; start " + std::to_string(r) + ": " + results[r].trace.failure;
    throw OptimizationError(msg);
  }
  out.best_restart = best;
  out.value = results[best].value;
  out.design = unpack_design(results[best].z, spec);
  return out;
}

int DiscreteDesign::count(int sensor) const {
  return static_cast<int>(std::count_if(
      activations.begin(), activations.end(),
      [&](const Activation& a) { return a.sensor == sensor; }));
}

namespace {
constexpr double kTimeTol = 1e-12;
}

DiscreteDesign round_design(const RelaxedDesign& relaxed,
                            const ProblemSpec& spec) {
  if (relaxed.w.rows() != spec.weight_cells ||
      relaxed.w.cols() != spec.sensor_count())
    throw ArgumentError("weight schedule has the wrong shape");
  struct Candidate {
    double weight, time;
    int cell, sensor;
  };
  std::vector<Candidate> cand;
  for (int c = 0; c < spec.weight_cells; ++c)
    for (int d = 0; d < spec.sensor_count(); ++d)
      if (relaxed.w(c, d) > 0.0)
        cand.push_back({relaxed.w(c, d), spec.cell_midpoint(c), c, d});
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.sensor < b.sensor;
  });

  DiscreteDesign out;
  out.u = relaxed.u;
  std::vector<int> cells;  // distinct selected cells
  for (const Candidate& c : cand) {
    if (static_cast<int>(out.activations.size()) >= spec.budget) break;
    bool same = std::find(cells.begin(), cells.end(), c.cell) != cells.end();
    bool ok = same;
    if (!same) {
      ok = true;
      for (int s : cells)
        if (std::abs(spec.cell_midpoint(s) - c.time) < spec.min_separation - kTimeTol)
          ok = false;
    }
    if (!ok) continue;
    if (!same) cells.push_back(c.cell);
    out.activations.push_back({c.time, c.sensor, c.cell});
  }
  std::sort(out.activations.begin(), out.activations.end(),
            [](const Activation& a, const Activation& b) {
              if (a.cell != b.cell) return a.cell < b.cell;
              return a.sensor < b.sensor;
            });
  return out;
}

RoundedDesign design_and_round(const DesignProblem& problem,
                               Criterion criterion,
                               const OptimizerOptions& opts) {
  const ProblemSpec& spec = problem.spec;
  const int nd = spec.sensor_count();
  RoundedDesign out;
  out.relaxed = optimize(problem, criterion, opts);
  out.design = round_design(out.relaxed.design, spec);
  out.solves = 1;
  while (static_cast<int>(out.design.activations.size()) < spec.budget) {
    WeightBounds b{Eigen::VectorXd::Zero(spec.weight_vars()),
                   Eigen::VectorXd::Ones(spec.weight_vars())};
    std::vector<int> cells;
    for (const Activation& a : out.design.activations) {
      b.lo(a.cell * nd + a.sensor) = 1.0;
      cells.push_back(a.cell);
    }
    bool open = false;
    for (int c = 0; c < spec.weight_cells; ++c) {
      bool selected = std::find(cells.begin(), cells.end(), c) != cells.end();
      bool blocked = false;
      for (int s : cells)
        if (s != c && std::abs(spec.cell_midpoint(s) - spec.cell_midpoint(c)) <
                          spec.min_separation - kTimeTol)
          blocked = true;
      for (int d = 0; d < nd; ++d) {
        const int i = c * nd + d;
        if (blocked && !selected) b.hi(i) = 0.0;
        if (b.hi(i) > b.lo(i)) open = true;
      }
    }
    if (!open) break;
    OptimizeResult next = optimize(problem, criterion, opts, &b);
    DiscreteDesign rounded = round_design(next.design, spec);
    ++out.solves;
    if (rounded.activations.size() <= out.design.activations.size()) break;
    out.relaxed = std::move(next);
    out.design = std::move(rounded);
  }
  return out;
}

bool is_feasible(const DiscreteDesign& design, const ProblemSpec& spec,
                 std::string* why) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (design.u.rows() != spec.control_intervals ||
      design.u.cols() != spec.control_dim())
    return fail("control schedule has the wrong shape");
  for (int i = 0; i < design.u.rows(); ++i)
    for (int j = 0; j < design.u.cols(); ++j)
      if (!(design.u(i, j) >= spec.control_lower(j) &&
            design.u(i, j) <= spec.control_upper(j)))
        return fail("control outside its bounds");
  if (static_cast<int>(design.activations.size()) > spec.budget)
    return fail("more activations than the budget");
  for (size_t i = 0; i < design.activations.size(); ++i) {
    const Activation& a = design.activations[i];
    if (a.sensor < 0 || a.sensor >= spec.sensor_count())
      return fail("sensor index out of range");
    if (a.cell < 0 || a.cell >= spec.weight_cells ||
        std::abs(a.time - spec.cell_midpoint(a.cell)) > 1e-9)
      return fail("activation time is not a cell midpoint");
    for (size_t j = 0; j < i; ++j) {
      const Activation& b = design.activations[j];
      if (b.cell == a.cell && b.sensor == a.sensor)
        return fail("duplicate activation");
      if (b.cell != a.cell &&
          std::abs(a.time - b.time) < spec.min_separation - kTimeTol)
        return fail("activation times closer than min_separation");
    }
  }
  return true;
}

RelaxedDesign to_relaxed(const DiscreteDesign& design, const ProblemSpec& spec) {
  RelaxedDesign r;
  r.u = design.u;
  r.w = Eigen::MatrixXd::Zero(spec.weight_cells, spec.sensor_count());
  for (const Activation& a : design.activations) r.w(a.cell, a.sensor) = 1.0;
  return r;
}

}  // namespace oed
