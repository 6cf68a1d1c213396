#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace oed {

/// One-dimensional quadrature rule normalized as a probability measure.
struct Quadrature1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for the standard normal (probabilists' weight), exact
/// for polynomials up to degree 2n-1. Computed by Golub-Welsch.
Quadrature1D gauss_hermite(int n);

/// Gauss-Legendre rule on [a, b] with weights summing to one, i.e. the
/// uniform distribution on [a, b].
Quadrature1D gauss_legendre(int n, double a, double b);

// ---------------------------------------------------------------------------
// Priors

struct UniformBoxPrior {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct GaussianPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// log(theta) ~ N(log_mean, log_cov).
struct LogNormalPrior {
  Eigen::VectorXd log_mean;
  Eigen::MatrixXd log_cov;
};

struct LogNormalMixturePrior {
  std::vector<double> weights;
  std::vector<LogNormalPrior> components;
};

using PriorSpec = std::variant<UniformBoxPrior, GaussianPrior, LogNormalPrior,
                               LogNormalMixturePrior>;

int prior_dim(const PriorSpec& prior);

/// True for priors supported on the positive orthant (log-normal families).
bool prior_is_positive(const PriorSpec& prior);

/// Finite Dirac mixture sum_k m_k delta(theta_k); `atoms` is N x n_theta.
struct ParticleCloud {
  Eigen::MatrixXd atoms;
  Eigen::VectorXd masses;
  Eigen::VectorXd mean;

  int size() const { return static_cast<int>(masses.size()); }
  int dim() const { return static_cast<int>(atoms.cols()); }
};

/// Deterministic tensor-quadrature discretization of the prior: Gauss-Legendre
/// for boxes, Gauss-Hermite through exp(mu + L z) for (log-)normals, one
/// tensor rule per mixture component.
ParticleCloud build_prior(const PriorSpec& prior, const std::vector<int>& orders);

/// Cloud from explicit atoms and masses; masses are renormalized.
ParticleCloud make_cloud(Eigen::MatrixXd atoms, Eigen::VectorXd masses);

/// Union of clouds with masses scaled by mixture weights. No deduplication.
ParticleCloud mix_clouds(const std::vector<ParticleCloud>& clouds,
                         const std::vector<double>& weights);

/// One exact draw from the continuous prior using the stream of `rng`.
template <class Rng>
Eigen::VectorXd sample_prior(const PriorSpec& prior, Rng& rng);

// ---------------------------------------------------------------------------
// Sensor noise

/// Independent zero-mean Gaussian noise per sensor.
struct NoiseSpec {
  std::vector<double> sigma;
  std::vector<int> order;  // Gauss-Hermite order of each sensor's rule

  int sensors() const { return static_cast<int>(sigma.size()); }
  double variance(int d) const { return sigma[d] * sigma[d]; }
};

void validate(const NoiseSpec& noise);

/// Tensor product of per-sensor Gauss-Hermite rules scaled by sigma_d.
/// `nodes` is Q x n_exp.
struct NoiseQuadrature {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;
};

/// Differential entropy of sensor d's noise, in nats.
double noise_entropy(const NoiseSpec& noise, int d);

NoiseQuadrature noise_quadrature(const NoiseSpec& noise);

/// Gauss-Hermite rule of sensor d alone, scaled by sigma_d.
Quadrature1D sensor_quadrature(const NoiseSpec& noise, int d);

}  // namespace oed

#include "oed/measure_sampling.hpp"
