#include "oed/criteria.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "oed/error.hpp"
#include "oed/parallel.hpp"

namespace oed {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_design(const RelaxedDesign& d, const ProblemSpec& spec) {
  if (d.u.rows() != spec.control_intervals || d.u.cols() != spec.control_dim())
    throw ArgumentError("control schedule has the wrong shape");
  if (d.w.rows() != spec.weight_cells || d.w.cols() != spec.sensor_count())
    throw ArgumentError("weight schedule has the wrong shape");
  if (!d.u.allFinite() || !d.w.allFinite())
    throw NumericError("design contains non-finite values");
}

int control_directions(const ProblemSpec& spec) {
  int n = spec.control_vars();
  if (n > kMaxControlDirections)
    throw CapacityError("too many control variables for differentiation (" +
                        std::to_string(n) + " > " +
                        std::to_string(kMaxControlDirections) + ")");
  return n;
}

void copy_tangent(const ADScalar& v, Eigen::Ref<Eigen::VectorXd> dst) {
  if (v.derivatives().size() == dst.size())
    dst = v.derivatives();
  else
    dst.setZero();
}

double log_sum_exp(const Eigen::Ref<const Eigen::ArrayXd>& a) {
  double m = a.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((a - m).exp().sum());
}

// Observation information of one parameter value on every (cell, sensor):
// M = (h_x G)^T (h_x G) / sigma^2 at the cell midpoint, with its control
// tangents (n_dirs x n_theta^2, column-major in the matrix index).
struct CellInformation {
  std::vector<Eigen::MatrixXd> value;
  std::vector<Eigen::MatrixXd> tangent;
};

CellInformation cell_information_values(const ProblemSpec& spec,
                                        const Eigen::MatrixXd& u,
                                        const Eigen::VectorXd& theta,
                                        const TimeGrid& grid) {
  const int nx = spec.state_dim(), np = spec.param_dim();
  const int ne = spec.sensor_count(), nw = spec.weight_cells;
  auto [traj, sens] = integrate_with_sensitivity(spec, u, theta, grid);
  CellInformation info;
  info.value.resize(static_cast<size_t>(nw) * ne);
  std::vector<double> hx(nx);
  for (int c = 0; c < nw; ++c) {
    const int mid = grid.cell_mid_node(c);
    Eigen::VectorXd x = traj.states.row(mid).transpose();
    for (int d = 0; d < ne; ++d) {
      spec.model->observe_gradient(d, std::span<const double>(x.data(), nx), hx);
      Eigen::RowVectorXd g(np);
      for (int a = 0; a < np; ++a) {
        double acc = 0.0;
        for (int i = 0; i < nx; ++i) acc += hx[i] * sens.G[mid](i, a);
        g(a) = acc;
      }
      Eigen::MatrixXd& val = info.value[c * ne + d];
      val.resize(np, np);
      const double inv_var = 1.0 / spec.noise.variance(d);
      for (int a = 0; a < np; ++a)
        for (int b = a; b < np; ++b) val(a, b) = val(b, a) = g(a) * g(b) * inv_var;
    }
  }
  return info;
}

CellInformation cell_information(const ProblemSpec& spec,
                                 const std::vector<ADScalar>& u_ad,
                                 const Eigen::VectorXd& theta,
                                 const TimeGrid& grid, int n_dirs) {
  const int nx = spec.state_dim(), np = spec.param_dim();
  const int ne = spec.sensor_count(), nw = spec.weight_cells;
  MidpointSensitivities ms = midpoint_sensitivities_ad(spec, u_ad, theta, grid);
  CellInformation info;
  info.value.resize(static_cast<size_t>(nw) * ne);
  info.tangent.resize(info.value.size());
  std::vector<ADScalar> hx(nx), g(np);
  Eigen::VectorXd tan(n_dirs);
  for (int c = 0; c < nw; ++c) {
    std::span<const ADScalar> x(ms.states.data() + c * nx, nx);
    const ADScalar* G = ms.sensitivities.data() + static_cast<size_t>(c) * nx * np;
    for (int d = 0; d < ne; ++d) {
      spec.model->observe_gradient(d, x, hx);
      for (int a = 0; a < np; ++a) {
        ADScalar s(0.0);
        for (int i = 0; i < nx; ++i) s += hx[i] * G[i * np + a];
        g[a] = s;
      }
      const double inv_var = 1.0 / spec.noise.variance(d);
      Eigen::MatrixXd& val = info.value[c * ne + d];
      Eigen::MatrixXd& tg = info.tangent[c * ne + d];
      val.resize(np, np);
      tg.resize(n_dirs, np * np);
      for (int a = 0; a < np; ++a)
        for (int b = a; b < np; ++b) {
          ADScalar m = g[a] * g[b] * inv_var;
          val(a, b) = val(b, a) = m.value();
          copy_tangent(m, tan);
          tg.col(a + b * np) = tan;
          tg.col(b + a * np) = tan;
        }
    }
  }
  return info;
}

// Log tilted masses and center responsibilities rho (N x J).
void tilt_log_weights(const ParticleCloud& prior,
                      const std::vector<TiltCenter>& centers,
                      const std::vector<Eigen::MatrixXd>& fisher,
                      Eigen::VectorXd& log_mu, Eigen::MatrixXd* rho) {
  const int n = prior.size(), nj = static_cast<int>(centers.size());
  bool untilted = true;
  for (const auto& F : fisher) untilted = untilted && (F.array() == 0.0).all();
  if (untilted) {
    // exp(0) factors: the masses are the prior masses exactly
    log_mu = prior.masses.unaryExpr(
        [](double m) { return m > 0 ? std::log(m) : kNegInf; });
    if (rho) {
      Eigen::RowVectorXd cm(nj);
      for (int j = 0; j < nj; ++j) cm(j) = centers[j].mass;
      *rho = (cm / cm.sum()).replicate(n, 1);
    }
    return;
  }
  Eigen::ArrayXd a(nj);
  Eigen::ArrayXd log_nu(n);
  if (rho) rho->resize(n, nj);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < nj; ++j) {
      Eigen::VectorXd delta = prior.atoms.row(k).transpose() - centers[j].theta;
      double lm = centers[j].mass > 0 ? std::log(centers[j].mass) : kNegInf;
      a(j) = lm - 0.5 * delta.dot(fisher[j] * delta);
    }
    double lse = log_sum_exp(a);
    if (rho) {
      if (std::isfinite(lse))
        rho->row(k) = (a - lse).exp().matrix().transpose();
      else
        rho->row(k).setZero();
    }
    double m = prior.masses(k);
    log_nu(k) = m > 0 ? std::log(m) + lse : kNegInf;
  }
  double log_z = log_sum_exp(log_nu);
  if (!std::isfinite(log_z)) throw NumericError("tilted masses vanish");
  log_mu = (log_nu - log_z).matrix();
}

// Tensor rule of the active sensors of one configuration.
struct ConfigRule {
  std::vector<int> sensors;
  Eigen::MatrixXd nodes;  // Q x |active|
  Eigen::VectorXd weights;
  double log_norm = 0.0;  // sum over active sensors of -1/2 log(2 pi sigma^2)
};

std::vector<ConfigRule> config_rules(const NoiseSpec& noise) {
  ConfigTable table = config_table(noise.sensors());
  std::vector<ConfigRule> rules(table.size());
  for (int eta = 1; eta < table.size(); ++eta) {
    ConfigRule& r = rules[eta];
    r.sensors = table.active[eta];
    const int na = static_cast<int>(r.sensors.size());
    std::vector<Quadrature1D> q;
    int total = 1;
    for (int d : r.sensors) {
      q.push_back(sensor_quadrature(noise, d));
      total *= static_cast<int>(q.back().nodes.size());
      r.log_norm -= 0.5 * std::log(2.0 * M_PI * noise.variance(d));
    }
    r.nodes.resize(total, na);
    r.weights.resize(total);
    std::vector<int> idx(na, 0);
    for (int t = 0; t < total; ++t) {
      double wt = 1.0;
      for (int i = 0; i < na; ++i) {
        r.nodes(t, i) = q[i].nodes[idx[i]];
        wt *= q[i].weights[idx[i]];
      }
      r.weights(t) = wt;
      for (int i = na - 1; i >= 0; --i) {
        if (++idx[i] < static_cast<int>(q[i].nodes.size())) break;
        idx[i] = 0;
      }
    }
  }
  return rules;
}

struct CellTerms {
  double value = 0.0;
  Eigen::VectorXd dw;      // n_exp
  Eigen::MatrixXd dY;      // N x n_exp
  Eigen::VectorXd dlogmu;  // N
};

// Value of one weight cell, Delta [sum_eta pi_eta A_eta + sum_d w_d H_d],
// with A_eta = sum_k mu_k sum_q s_q log L_kq(eta), and its derivatives.
CellTerms cell_terms(const Eigen::MatrixXd& Y, const Eigen::VectorXd& log_mu,
                     const Eigen::VectorXd& w, const NoiseSpec& noise,
                     const std::vector<ConfigRule>& rules, double delta,
                     bool with_gradient) {
  const int n = static_cast<int>(Y.rows()), ne = static_cast<int>(Y.cols());
  CellTerms out;
  out.dw = Eigen::VectorXd::Zero(ne);
  if (with_gradient) {
    out.dY = Eigen::MatrixXd::Zero(n, ne);
    out.dlogmu = Eigen::VectorXd::Zero(n);
  }

  const Eigen::VectorXd pi = config_weights(w);
  const Eigen::ArrayXd lmu = log_mu.array();
  const Eigen::ArrayXd mu = lmu.exp();
  std::vector<double> half_prec(ne), prec(ne);
  for (int d = 0; d < ne; ++d) {
    prec[d] = 1.0 / noise.variance(d);
    half_prec[d] = 0.5 * prec[d];
  }

  double total = 0.0;
  Eigen::ArrayXd e(n), r(n), acc_r(n);
  std::vector<Eigen::ArrayXd> diff(ne, Eigen::ArrayXd(n)), z(ne, Eigen::ArrayXd(n)),
      acc_z(ne, Eigen::ArrayXd(n));
  for (int eta = 1; eta < static_cast<int>(rules.size()); ++eta) {
    // d pi_eta / d w_d
    Eigen::VectorXd dpi(ne);
    bool any = pi(eta) != 0.0;
    for (int d = 0; d < ne; ++d) {
      double p = (eta >> d & 1) ? 1.0 : -1.0;
      for (int d2 = 0; d2 < ne; ++d2)
        if (d2 != d) p *= (eta >> d2 & 1) ? w(d2) : 1.0 - w(d2);
      dpi(d) = p;
      any = any || p != 0.0;
    }
    if (!any) continue;

    const ConfigRule& rule = rules[eta];
    const int na = static_cast<int>(rule.sensors.size());
    const double coef = with_gradient ? delta * pi(eta) : 0.0;
    double A = 0.0;
    for (int k = 0; k < n; ++k) {
      if (mu(k) == 0.0) continue;
      for (int i = 0; i < na; ++i) {
        const int d = rule.sensors[i];
        diff[d] = Y(k, d) - Y.col(d).array();
      }
      if (coef != 0.0) {
        acc_r.setZero();
        for (int i = 0; i < na; ++i) acc_z[rule.sensors[i]].setZero();
      }
      double Ak = 0.0, dk = 0.0;
      for (int q = 0; q < rule.weights.size(); ++q) {
        e = lmu;
        for (int i = 0; i < na; ++i) {
          const int d = rule.sensors[i];
          z[d] = diff[d] + rule.nodes(q, i);
          e -= half_prec[d] * z[d].square();
        }
        const double m = e.maxCoeff();
        r = (e - m).exp();
        const double s = r.sum();
        const double L = m + std::log(s) + rule.log_norm;
        Ak += rule.weights(q) * L;
        if (coef == 0.0) continue;
        const double c = coef * mu(k) * rule.weights(q);
        dk += c * L;
        r *= c / s;
        acc_r += r;
        for (int i = 0; i < na; ++i) {
          const int d = rule.sensors[i];
          acc_z[d] += r * z[d];
        }
      }
      A += mu(k) * Ak;
      if (coef == 0.0) continue;
      out.dlogmu(k) += dk;
      out.dlogmu += acc_r.matrix();
      for (int i = 0; i < na; ++i) {
        const int d = rule.sensors[i];
        out.dY.col(d) += prec[d] * acc_z[d].matrix();
        out.dY(k, d) -= prec[d] * acc_z[d].sum();
      }
    }
    total += pi(eta) * A;
    out.dw += delta * A * dpi;
  }
  for (int d = 0; d < ne; ++d) {
    double h = noise_entropy(noise, d);
    total += w(d) * h;
    out.dw(d) += delta * h;
  }
  out.value = delta * total;
  return out;
}

// Shared implementation of the instantaneous (no centers) and tilted
// surrogates.
ObjectiveEval surrogate(const RelaxedDesign& design, const ParticleCloud& prior,
                        const ProblemSpec& spec,
                        const std::vector<TiltCenter>* centers,
                        bool with_gradient) {
  check_design(design, spec);
  if (prior.dim() != spec.param_dim())
    throw ArgumentError("prior dimension does not match the model");
  const int n_dirs = control_directions(spec);
  const TimeGrid grid(spec);
  const int nx = spec.state_dim(), ne = spec.sensor_count();
  const int nw = spec.weight_cells, n = prior.size();
  const double delta = spec.cell_width();
  std::vector<ADScalar> u_ad;
  if (with_gradient) u_ad = seeded_controls(spec, design.u);

  std::vector<Eigen::MatrixXd> Y(nw, Eigen::MatrixXd(n, ne));
  std::vector<Eigen::MatrixXd> Ytan;
  if (with_gradient) Ytan.assign(nw, Eigen::MatrixXd(n_dirs, n * ne));
  parallel_for(n, [&](int k) {
    Eigen::VectorXd theta = prior.atoms.row(k).transpose();
    if (!with_gradient) {
      Trajectory tr = integrate(spec, design.u, theta, grid);
      for (int c = 0; c < nw; ++c) {
        Eigen::VectorXd x = tr.states.row(grid.cell_mid_node(c)).transpose();
        for (int d = 0; d < ne; ++d)
          Y[c](k, d) = spec.model->observe(d, std::span<const double>(x.data(), nx));
      }
      return;
    }
    std::vector<ADScalar> xs = midpoint_states_ad(spec, u_ad, theta, grid);
    for (int c = 0; c < nw; ++c) {
      std::span<const ADScalar> x(xs.data() + c * nx, nx);
      for (int d = 0; d < ne; ++d) {
        ADScalar y = spec.model->observe(d, x);
        Y[c](k, d) = y.value();
        copy_tangent(y, Ytan[c].col(k * ne + d));
      }
    }
  });

  // Masses per cell.
  std::vector<Eigen::VectorXd> log_mu(nw);
  std::vector<Eigen::MatrixXd> rho;
  std::vector<CellInformation> info;
  if (!centers) {
    Eigen::VectorXd lm = prior.masses.unaryExpr(
        [](double m) { return m > 0 ? std::log(m) : kNegInf; });
    for (auto& l : log_mu) l = lm;
  } else {
    const int nj = static_cast<int>(centers->size());
    if (nj == 0) throw ArgumentError("tilting needs at least one center");
    info.resize(nj);
    parallel_for(nj, [&](int j) {
      info[j] = with_gradient ? cell_information(spec, u_ad, (*centers)[j].theta,
                                                 grid, n_dirs)
                              : cell_information_values(
                                    spec, design.u, (*centers)[j].theta, grid);
    });
    rho.resize(nw);
    const int np = spec.param_dim();
    std::vector<Eigen::MatrixXd> F(nj, Eigen::MatrixXd::Zero(np, np));
    for (int c = 0; c < nw; ++c) {
      tilt_log_weights(prior, *centers, F, log_mu[c], &rho[c]);
      for (int j = 0; j < nj; ++j)
        for (int d = 0; d < ne; ++d)
          F[j] += delta * design.w(c, d) * info[j].value[c * ne + d];
    }
  }

  const std::vector<ConfigRule> rules = config_rules(spec.noise);
  std::vector<CellTerms> terms(nw);
  parallel_for(nw, [&](int c) {
    terms[c] = cell_terms(Y[c], log_mu[c], design.w.row(c).transpose(),
                          spec.noise, rules, delta, with_gradient);
  });

  ObjectiveEval out;
  if (!with_gradient) {
    for (int c = 0; c < nw; ++c) out.value += terms[c].value;
    if (!std::isfinite(out.value))
      throw NumericError("surrogate objective is not finite");
    return out;
  }
  out.gradient = Eigen::VectorXd::Zero(n_dirs + spec.weight_vars());
  auto gu = out.gradient.head(n_dirs);
  for (int c = 0; c < nw; ++c) {
    out.value += terms[c].value;
    out.gradient.segment(n_dirs + c * ne, ne) += terms[c].dw;
    // dY is N x n_exp column-major; tangents are ordered k * n_exp + d.
    Eigen::MatrixXd dyt = terms[c].dY.transpose();
    gu += Ytan[c] * Eigen::Map<const Eigen::VectorXd>(dyt.data(), n * ne);
  }

  if (centers) {
    const int nj = static_cast<int>(centers->size());
    const int np = spec.param_dim();
    // dV/dF_j on each cell through the log tilted masses.
    std::vector<std::vector<Eigen::MatrixXd>> P(
        nw, std::vector<Eigen::MatrixXd>(nj));
    parallel_for(nw, [&](int c) {
      const Eigen::VectorXd& g = terms[c].dlogmu;
      Eigen::VectorXd mu = log_mu[c].array().exp().matrix();
      const double gsum = g.sum();
      for (int j = 0; j < nj; ++j) {
        Eigen::MatrixXd Pj = Eigen::MatrixXd::Zero(np, np);
        for (int k = 0; k < n; ++k) {
          double coef = -0.5 * rho[c](k, j) * (g(k) - mu(k) * gsum);
          if (coef == 0.0) continue;
          Eigen::VectorXd dl =
              prior.atoms.row(k).transpose() - (*centers)[j].theta;
          Pj.noalias() += coef * dl * dl.transpose();
        }
        P[c][j] = std::move(Pj);
      }
    });
    for (int j = 0; j < nj; ++j) {
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(np, np);
      for (int c = nw - 1; c >= 0; --c) {
        // B = sum over later cells of dV/dF_j.
        Eigen::Map<const Eigen::VectorXd> b(B.data(), np * np);
        for (int d = 0; d < ne; ++d) {
          const Eigen::MatrixXd& M = info[j].value[c * ne + d];
          out.gradient(n_dirs + c * ne + d) += delta * (B.array() * M.array()).sum();
          const double wcd = design.w(c, d);
          if (wcd != 0.0) gu += (delta * wcd) * (info[j].tangent[c * ne + d] * b);
        }
        B += P[c][j];
      }
    }
  }
  if (!std::isfinite(out.value) || !out.gradient.allFinite())
    throw NumericError("surrogate objective is not finite");
  return out;
}

}  // namespace

Eigen::VectorXd pack_design(const RelaxedDesign& design) {
  Eigen::VectorXd z(design.u.size() + design.w.size());
  int i = 0;
  for (int r = 0; r < design.u.rows(); ++r)
    for (int c = 0; c < design.u.cols(); ++c) z(i++) = design.u(r, c);
  for (int r = 0; r < design.w.rows(); ++r)
    for (int c = 0; c < design.w.cols(); ++c) z(i++) = design.w(r, c);
  return z;
}

RelaxedDesign unpack_design(const Eigen::VectorXd& z, const ProblemSpec& spec) {
  if (z.size() != spec.control_vars() + spec.weight_vars())
    throw ArgumentError("decision vector has the wrong length");
  RelaxedDesign d;
  d.u.resize(spec.control_intervals, spec.control_dim());
  d.w.resize(spec.weight_cells, spec.sensor_count());
  int i = 0;
  for (int r = 0; r < d.u.rows(); ++r)
    for (int c = 0; c < d.u.cols(); ++c) d.u(r, c) = z(i++);
  for (int r = 0; r < d.w.rows(); ++r)
    for (int c = 0; c < d.w.cols(); ++c) d.w(r, c) = z(i++);
  return d;
}

ConfigTable config_table(int sensors) {
  if (sensors < 1 || sensors > 16)
    throw ArgumentError("sensor count must be between 1 and 16");
  ConfigTable t;
  t.sensors = sensors;
  t.active.resize(1u << sensors);
  for (unsigned eta = 0; eta < t.active.size(); ++eta)
    for (int d = 0; d < sensors; ++d)
      if (eta >> d & 1) t.active[eta].push_back(d);
  return t;
}

Eigen::VectorXd config_weights(const Eigen::VectorXd& w_t) {
  const int ne = static_cast<int>(w_t.size());
  Eigen::VectorXd pi(1 << ne);
  for (int eta = 0; eta < pi.size(); ++eta) {
    double p = 1.0;
    for (int d = 0; d < ne; ++d) p *= (eta >> d & 1) ? w_t(d) : 1.0 - w_t(d);
    pi(eta) = p;
  }
  return pi;
}

double configuration_entropy(const Eigen::VectorXd& w_t) {
  Eigen::VectorXd pi = config_weights(w_t);
  double h = 0.0;
  for (double p : pi)
    if (p > 0) h -= p * std::log(p);
  return h;
}

double relaxed_conditional_entropy(const Eigen::VectorXd& w_t,
                                   const NoiseSpec& noise) {
  double h = configuration_entropy(w_t);
  for (int d = 0; d < w_t.size(); ++d) h += w_t(d) * noise_entropy(noise, d);
  return h;
}

double predictive_log_likelihood(const Eigen::MatrixXd& atom_obs,
                                 const Eigen::VectorXd& masses, int k,
                                 unsigned eta, const Eigen::VectorXd& xi,
                                 const NoiseSpec& noise) {
  const int n = static_cast<int>(atom_obs.rows());
  Eigen::ArrayXd e(n);
  double norm = 0.0;
  for (int d = 0; d < atom_obs.cols(); ++d)
    if (eta >> d & 1) norm -= 0.5 * std::log(2.0 * M_PI * noise.variance(d));
  for (int l = 0; l < n; ++l) {
    double s = masses(l) > 0 ? std::log(masses(l)) : kNegInf;
    for (int d = 0; d < atom_obs.cols(); ++d) {
      if (!(eta >> d & 1)) continue;
      double z = atom_obs(k, d) - atom_obs(l, d) + xi(d);
      s -= 0.5 * z * z / noise.variance(d);
    }
    e(l) = s;
  }
  return log_sum_exp(e) + norm;
}

Eigen::MatrixXd fim_increment(const Eigen::MatrixXd& dhdx_G,
                              const Eigen::VectorXd& w_t,
                              const NoiseSpec& noise) {
  const int np = static_cast<int>(dhdx_G.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(np, np);
  for (int d = 0; d < dhdx_G.rows(); ++d) {
    Eigen::RowVectorXd g = dhdx_G.row(d);
    out.noalias() += (w_t(d) / noise.variance(d)) * g.transpose() * g;
  }
  return out;
}

FisherAccumulator fisher_accumulator(const RelaxedDesign& design,
                                     const Eigen::VectorXd& theta_ref,
                                     const ProblemSpec& spec) {
  check_design(design, spec);
  const TimeGrid grid(spec);
  const int nx = spec.state_dim(), np = spec.param_dim();
  const int ne = spec.sensor_count(), spc = grid.steps_per_cell();
  auto [traj, sens] = integrate_with_sensitivity(spec, design.u, theta_ref, grid);
  FisherAccumulator acc;
  acc.rate.resize(spec.weight_cells);
  acc.F.resize(grid.steps() + 1);
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(np, np);
  acc.F[0] = F;
  std::vector<double> hx(nx);
  const double delta = spec.cell_width();
  for (int c = 0; c < spec.weight_cells; ++c) {
    const int mid = grid.cell_mid_node(c);
    Eigen::VectorXd x = traj.states.row(mid).transpose();
    Eigen::MatrixXd H(ne, np);
    for (int d = 0; d < ne; ++d) {
      spec.model->observe_gradient(d, std::span<const double>(x.data(), nx), hx);
      H.row(d) = Eigen::Map<const Eigen::RowVectorXd>(hx.data(), nx) * sens.G[mid];
    }
    acc.rate[c] = fim_increment(H, design.w.row(c).transpose(), spec.noise);
    const int start = grid.cell_start_node(c);
    for (int i = 1; i <= spc; ++i)
      acc.F[start + i] = F + (delta * i / spc) * acc.rate[c];
    F += delta * acc.rate[c];
    acc.F[start + spc] = F;
  }
  return acc;
}

ObjectiveEval fisher_objective(const RelaxedDesign& design,
                               const Eigen::VectorXd& theta_nom,
                               const ProblemSpec& spec,
                               FisherCriterion criterion,
                               bool with_gradient) {
  check_design(design, spec);
  if (theta_nom.size() != spec.param_dim())
    throw ArgumentError("nominal parameter has the wrong dimension");
  const int n_dirs = control_directions(spec);
  const TimeGrid grid(spec);
  const int np = spec.param_dim(), ne = spec.sensor_count();
  const int nw = spec.weight_cells;
  const double delta = spec.cell_width();
  CellInformation info =
      with_gradient
          ? cell_information(spec, seeded_controls(spec, design.u), theta_nom,
                             grid, n_dirs)
          : cell_information_values(spec, design.u, theta_nom, grid);

  Eigen::MatrixXd F = kFisherRidge * Eigen::MatrixXd::Identity(np, np);
  for (int c = 0; c < nw; ++c)
    for (int d = 0; d < ne; ++d)
      F += delta * design.w(c, d) * info.value[c * ne + d];

  Eigen::LLT<Eigen::MatrixXd> llt(F);
  if (llt.info() != Eigen::Success)
    throw NumericError("information matrix is not positive definite");
  Eigen::MatrixXd Finv = llt.solve(Eigen::MatrixXd::Identity(np, np));
  ObjectiveEval out;
  Eigen::MatrixXd P;
  if (criterion == FisherCriterion::D) {
    const Eigen::MatrixXd L = llt.matrixL();
    out.value = -2.0 * L.diagonal().array().log().sum();
    P = -Finv;
  } else {
    out.value = Finv.trace();
    P = -Finv * Finv;
  }
  if (!with_gradient) {
    if (!std::isfinite(out.value))
      throw NumericError("Fisher objective is not finite");
    return out;
  }
  P = 0.5 * (P + P.transpose()).eval();

  out.gradient = Eigen::VectorXd::Zero(n_dirs + spec.weight_vars());
  Eigen::Map<const Eigen::VectorXd> p(P.data(), np * np);
  for (int c = 0; c < nw; ++c)
    for (int d = 0; d < ne; ++d) {
      const Eigen::MatrixXd& M = info.value[c * ne + d];
      out.gradient(n_dirs + c * ne + d) = delta * (P.array() * M.array()).sum();
      const double wcd = design.w(c, d);
      if (wcd != 0.0)
        out.gradient.head(n_dirs) +=
            (delta * wcd) * (info.tangent[c * ne + d] * p);
    }
  if (!std::isfinite(out.value) || !out.gradient.allFinite())
    throw NumericError("Fisher objective is not finite");
  return out;
}

std::vector<TiltCenter> mean_center(const ParticleCloud& prior) {
  return {TiltCenter{prior.mean, 1.0}};
}

std::vector<TiltCenter> cloud_centers(const ParticleCloud& cloud) {
  std::vector<TiltCenter> out;
  for (int i = 0; i < cloud.size(); ++i)
    if (cloud.masses(i) > 0)
      out.push_back({cloud.atoms.row(i).transpose(), cloud.masses(i)});
  return out;
}

Eigen::VectorXd tilt_weights(const ParticleCloud& prior,
                             const std::vector<TiltCenter>& centers,
                             const std::vector<Eigen::MatrixXd>& fisher) {
  if (centers.empty() || fisher.size() != centers.size())
    throw ArgumentError("need one information matrix per center");
  Eigen::VectorXd log_mu;
  tilt_log_weights(prior, centers, fisher, log_mu, nullptr);
  return log_mu.array().exp().matrix();
}

TiltPath tilt_weight_path(const RelaxedDesign& design,
                          const ParticleCloud& prior, const ProblemSpec& spec,
                          const std::vector<TiltCenter>& centers) {
  if (centers.empty()) throw ArgumentError("tilting needs at least one center");
  TiltPath path;
  path.centers = centers;
  for (const auto& c : centers)
    path.fisher.push_back(fisher_accumulator(design, c.theta, spec));
  const int nodes = static_cast<int>(path.fisher[0].F.size());
  path.mu.resize(nodes, prior.size());
  std::vector<Eigen::MatrixXd> F(centers.size());
  for (int s = 0; s < nodes; ++s) {
    for (size_t j = 0; j < centers.size(); ++j) F[j] = path.fisher[j].F[s];
    path.mu.row(s) = tilt_weights(prior, centers, F).transpose();
  }
  return path;
}

ObjectiveEval inst_objective(const RelaxedDesign& design,
                             const ParticleCloud& prior,
                             const ProblemSpec& spec, bool with_gradient) {
  return surrogate(design, prior, spec, nullptr, with_gradient);
}

ObjectiveEval tilt_objective(const RelaxedDesign& design,
                             const ParticleCloud& prior,
                             const ProblemSpec& spec,
                             const std::vector<TiltCenter>& centers,
                             bool with_gradient) {
  return surrogate(design, prior, spec, &centers, with_gradient);
}

}  // namespace oed
