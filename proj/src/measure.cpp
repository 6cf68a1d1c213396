#include "oed/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "oed/error.hpp"

namespace oed {
namespace {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
// orthogonal polynomial family, weights the squared first eigenvector
// components (the measure has unit mass).
Quadrature1D golub_welsch(const Eigen::VectorXd& diag,
                          const Eigen::VectorXd& offdiag) {
  const Eigen::Index n = diag.size();
  Quadrature1D rule;
  if (n == 1) {
    rule.nodes = {diag[0]};
    rule.weights = {1.0};
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw NumericError("Golub-Welsch eigen-decomposition failed");
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v = solver.eigenvectors()(0, i);
    rule.weights[i] = v * v;
  }
  // Both families are symmetric; enforce it exactly.
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    const Eigen::Index j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  const double total =
      std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  for (double& w : rule.weights) w /= total;
  return rule;
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols())
    throw ArgumentError("covariance must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success ||
      !(llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all())
    throw ArgumentError("covariance is not positive definite");
  return llt.matrixL();
}

// Tensor product of per-dimension standard rules; `map` turns the vector of
// per-dimension nodes into an atom.
template <class Map>
ParticleCloud tensor_cloud(const std::vector<Quadrature1D>& rules, Map&& map) {
  const int dim = static_cast<int>(rules.size());
  int count = 1;
  for (const auto& r : rules) count *= static_cast<int>(r.nodes.size());
  Eigen::MatrixXd atoms(count, dim);
  Eigen::VectorXd masses(count);
  std::vector<int> idx(dim, 0);
  Eigen::VectorXd z(dim);
  for (int a = 0; a < count; ++a) {
    double m = 1.0;
    for (int d = 0; d < dim; ++d) {
      z[d] = rules[d].nodes[idx[d]];
      m *= rules[d].weights[idx[d]];
    }
    atoms.row(a) = map(z).transpose();
    masses[a] = m;
    // Last dimension varies fastest.
    for (int d = dim - 1; d >= 0; --d) {
      if (++idx[d] < static_cast<int>(rules[d].nodes.size())) break;
      idx[d] = 0;
    }
  }
  return make_cloud(std::move(atoms), std::move(masses));
}

void check_orders(const std::vector<int>& orders, int dim) {
  if (static_cast<int>(orders.size()) != dim)
    throw ArgumentError("one quadrature order per parameter is required");
  for (int o : orders)
    if (o < 1) throw ArgumentError("quadrature orders must be >= 1");
}

ParticleCloud gaussian_cloud(const Eigen::VectorXd& mean,
                             const Eigen::MatrixXd& cov,
                             const std::vector<int>& orders, bool exponentiate) {
  const int dim = static_cast<int>(mean.size());
  if (cov.rows() != dim) throw ArgumentError("covariance has the wrong size");
  check_orders(orders, dim);
  const Eigen::MatrixXd L = cholesky_factor(cov);
  std::vector<Quadrature1D> rules;
  for (int o : orders) rules.push_back(gauss_hermite(o));
  return tensor_cloud(rules, [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    Eigen::VectorXd v = mean + L * z;
    if (exponentiate) v = v.array().exp().matrix();
    return v;
  });
}

}  // namespace

Quadrature1D gauss_hermite(int n) {
  if (n < 1) throw ArgumentError("Gauss-Hermite order must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int i = 1; i < n; ++i) off[i - 1] = std::sqrt(static_cast<double>(i));
  return golub_welsch(diag, off);
}

Quadrature1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ArgumentError("Gauss-Legendre order must be >= 1");
  if (!(a < b)) throw ArgumentError("Gauss-Legendre interval needs a < b");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int i = 1; i < n; ++i) {
    const double k = i;
    off[i - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  }
  Quadrature1D rule = golub_welsch(diag, off);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (double& x : rule.nodes) x = mid + half * x;
  return rule;
}

int prior_dim(const PriorSpec& prior) {
  return std::visit(
      [](const auto& p) -> int {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UniformBoxPrior>)
          return static_cast<int>(p.lower.size());
        else if constexpr (std::is_same_v<T, GaussianPrior>)
          return static_cast<int>(p.mean.size());
        else if constexpr (std::is_same_v<T, LogNormalPrior>)
          return static_cast<int>(p.log_mean.size());
        else
          return p.components.empty()
                     ? 0
                     : static_cast<int>(p.components[0].log_mean.size());
      },
      prior);
}

bool prior_is_positive(const PriorSpec& prior) {
  return std::holds_alternative<LogNormalPrior>(prior) ||
         std::holds_alternative<LogNormalMixturePrior>(prior);
}

ParticleCloud make_cloud(Eigen::MatrixXd atoms, Eigen::VectorXd masses) {
  if (atoms.rows() != masses.size() || masses.size() == 0)
    throw ArgumentError("cloud needs one positive mass per atom");
  if (!(masses.array() > 0.0).all())
    throw ArgumentError("cloud masses must be positive");
  ParticleCloud cloud;
  cloud.masses = masses / masses.sum();
  cloud.atoms = std::move(atoms);
  cloud.mean = cloud.atoms.transpose() * cloud.masses;
  return cloud;
}

ParticleCloud mix_clouds(const std::vector<ParticleCloud>& clouds,
                         const std::vector<double>& weights) {
  if (clouds.empty() || clouds.size() != weights.size())
    throw ArgumentError("mixture needs one weight per component");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  Eigen::Index rows = 0;
  for (const auto& c : clouds) rows += c.size();
  const int dim = clouds[0].dim();
  Eigen::MatrixXd atoms(rows, dim);
  Eigen::VectorXd masses(rows);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    if (!(weights[i] > 0.0)) throw ArgumentError("mixture weights must be > 0");
    if (clouds[i].dim() != dim)
      throw ArgumentError("mixture components differ in dimension");
    atoms.middleRows(at, clouds[i].size()) = clouds[i].atoms;
    masses.segment(at, clouds[i].size()) =
        clouds[i].masses * (weights[i] / total);
    at += clouds[i].size();
  }
  return make_cloud(std::move(atoms), std::move(masses));
}

ParticleCloud build_prior(const PriorSpec& prior,
                          const std::vector<int>& orders) {
  return std::visit(
      [&](const auto& p) -> ParticleCloud {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UniformBoxPrior>) {
          const int dim = static_cast<int>(p.lower.size());
          if (p.upper.size() != dim)
            throw ArgumentError("box bounds differ in length");
          check_orders(orders, dim);
          std::vector<Quadrature1D> rules;
          for (int d = 0; d < dim; ++d)
            rules.push_back(gauss_legendre(orders[d], p.lower[d], p.upper[d]));
          return tensor_cloud(rules, [](const Eigen::VectorXd& z) { return z; });
        } else if constexpr (std::is_same_v<T, GaussianPrior>) {
          return gaussian_cloud(p.mean, p.cov, orders, false);
        } else if constexpr (std::is_same_v<T, LogNormalPrior>) {
          return gaussian_cloud(p.log_mean, p.log_cov, orders, true);
        } else {
          if (p.components.empty() ||
              p.components.size() != p.weights.size())
            throw ArgumentError("mixture needs one weight per component");
          std::vector<ParticleCloud> parts;
          for (const auto& c : p.components)
            parts.push_back(gaussian_cloud(c.log_mean, c.log_cov, orders, true));
          return mix_clouds(parts, p.weights);
        }
      },
      prior);
}

void validate(const NoiseSpec& noise) {
  if (noise.sigma.size() != noise.order.size())
    throw ArgumentError("noise spec needs one order per sensor");
  for (std::size_t d = 0; d < noise.sigma.size(); ++d) {
    if (!(noise.sigma[d] > 0.0) || !std::isfinite(noise.sigma[d]))
      throw ArgumentError("sigma_" + std::to_string(d + 1) +
                          " must be positive");
    if (noise.order[d] < 2)
      throw ArgumentError("noise quadrature order must be >= 2");
  }
}

double noise_entropy(const NoiseSpec& noise, int d) {
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e *
                        noise.variance(d));
}

Quadrature1D sensor_quadrature(const NoiseSpec& noise, int d) {
  Quadrature1D rule = gauss_hermite(noise.order[d]);
  for (double& x : rule.nodes) x *= noise.sigma[d];
  return rule;
}

NoiseQuadrature noise_quadrature(const NoiseSpec& noise) {
  validate(noise);
  const int ns = noise.sensors();
  std::vector<Quadrature1D> rules;
  int count = 1;
  for (int d = 0; d < ns; ++d) {
    rules.push_back(sensor_quadrature(noise, d));
    count *= noise.order[d];
  }
  NoiseQuadrature quad;
  quad.nodes.resize(count, ns);
  quad.weights.resize(count);
  std::vector<int> idx(ns, 0);
  for (int q = 0; q < count; ++q) {
    double s = 1.0;
    for (int d = 0; d < ns; ++d) {
      quad.nodes(q, d) = rules[d].nodes[idx[d]];
      s *= rules[d].weights[idx[d]];
    }
    quad.weights[q] = s;
    for (int d = ns - 1; d >= 0; --d) {
      if (++idx[d] < noise.order[d]) break;
      idx[d] = 0;
    }
  }
  return quad;
}

}  // namespace oed
