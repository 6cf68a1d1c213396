#include "oed/models.hpp"

#include <algorithm>
#include <cmath>

#include "oed/error.hpp"

namespace oed {

ModelPtr make_model(const std::string& name,
                    const std::vector<double>& coefficients) {
  if (name == "harmonic") {
    if (coefficients.size() != 2)
      throw ConfigurationError("harmonic model needs two dampings");
    return std::make_shared<HarmonicOscillator>(coefficients[0],
                                                coefficients[1]);
  }
  if (name == "lotka_volterra") {
    if (coefficients.size() != 2)
      throw ConfigurationError("lotka_volterra model needs two control gains");
    return std::make_shared<LotkaVolterra>(coefficients[0], coefficients[1]);
  }
  if (name == "linear_drift") {
    const int dim = coefficients.empty() ? 1 : static_cast<int>(coefficients[0]);
    if (dim < 1) throw ConfigurationError("linear_drift dimension must be >= 1");
    return std::make_shared<LinearDrift>(dim);
  }
  throw ConfigurationError("unknown model '" + name + "'");
}

double jacobian_check(const Model& model, std::span<const double> x,
                      std::span<const double> u, std::span<const double> theta,
                      double t) {
  const int nx = model.state_dim();
  const int np = model.param_dim();
  std::vector<double> fx(nx * nx), fp(nx * np), f_plus(nx), f_minus(nx);
  model.state_jacobian(x, u, theta, t, fx);
  model.param_jacobian(x, u, theta, t, fp);

  double worst = 0.0;
  auto compare = [&](double analytic, double fd) {
    const double scale = std::max({1.0, std::abs(analytic), std::abs(fd)});
    worst = std::max(worst, std::abs(analytic - fd) / scale);
  };

  std::vector<double> xp(x.begin(), x.end());
  for (int k = 0; k < nx; ++k) {
    const double step = 1e-6 * (1.0 + std::abs(x[k]));
    xp[k] = x[k] + step;
    model.dynamics(xp, u, theta, t, f_plus);
    xp[k] = x[k] - step;
    model.dynamics(xp, u, theta, t, f_minus);
    xp[k] = x[k];
    for (int i = 0; i < nx; ++i)
      compare(fx[i * nx + k], (f_plus[i] - f_minus[i]) / (2.0 * step));
  }
  std::vector<double> tp(theta.begin(), theta.end());
  for (int k = 0; k < np; ++k) {
    const double step = 1e-6 * (1.0 + std::abs(theta[k]));
    tp[k] = theta[k] + step;
    model.dynamics(x, u, tp, t, f_plus);
    tp[k] = theta[k] - step;
    model.dynamics(x, u, tp, t, f_minus);
    tp[k] = theta[k];
    for (int i = 0; i < nx; ++i)
      compare(fp[i * np + k], (f_plus[i] - f_minus[i]) / (2.0 * step));
  }
  std::vector<double> grad(nx);
  for (int d = 0; d < model.sensor_count(); ++d) {
    model.observe_gradient(d, x, grad);
    for (int k = 0; k < nx; ++k) {
      const double step = 1e-6 * (1.0 + std::abs(x[k]));
      xp[k] = x[k] + step;
      const double hp = model.observe(d, xp);
      xp[k] = x[k] - step;
      const double hm = model.observe(d, xp);
      xp[k] = x[k];
      compare(grad[k], (hp - hm) / (2.0 * step));
    }
  }
  return worst;
}

}  // namespace oed
