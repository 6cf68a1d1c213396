#pragma once

#include <cmath>
#include <random>
#include <type_traits>

#include <Eigen/Cholesky>

#include "oed/error.hpp"

namespace oed {
namespace detail {

template <class Rng>
Eigen::VectorXd sample_gaussian(const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& cov, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw ArgumentError("covariance is not positive definite");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return mean + llt.matrixL() * z;
}

}  // namespace detail

template <class Rng>
Eigen::VectorXd sample_prior(const PriorSpec& prior, Rng& rng) {
  return std::visit(
      [&rng](const auto& p) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, UniformBoxPrior>) {
          std::uniform_real_distribution<double> unit(0.0, 1.0);
          Eigen::VectorXd theta(p.lower.size());
          for (Eigen::Index i = 0; i < theta.size(); ++i)
            theta[i] = p.lower[i] + (p.upper[i] - p.lower[i]) * unit(rng);
          return theta;
        } else if constexpr (std::is_same_v<T, GaussianPrior>) {
          return detail::sample_gaussian(p.mean, p.cov, rng);
        } else if constexpr (std::is_same_v<T, LogNormalPrior>) {
          return detail::sample_gaussian(p.log_mean, p.log_cov, rng)
              .array()
              .exp()
              .matrix();
        } else {
          std::discrete_distribution<int> pick(p.weights.begin(),
                                               p.weights.end());
          const auto& c = p.components[pick(rng)];
          return detail::sample_gaussian(c.log_mean, c.log_cov, rng)
              .array()
              .exp()
              .matrix();
        }
      },
      prior);
}

}  // namespace oed
