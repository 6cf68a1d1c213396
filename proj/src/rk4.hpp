#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "oed/autodiff.hpp"
#include "oed/error.hpp"
#include "oed/problem.hpp"

namespace oed::detail {

inline bool is_finite(double v) { return std::isfinite(v); }
inline bool is_finite(const ADScalar& v) { return std::isfinite(v.value()); }

/// Fixed-step classical RK4 over the nodes of `grid`, shared by every
/// integration path so that plain and augmented runs agree bit for bit.
///
/// rhs(step, t, y, dy) evaluates the vector field; observe(node, y) is called
/// at node 0 and after every step. Stops after `last_node` (inclusive).
template <class S, class Rhs, class Observer>
void rk4_run(std::vector<S>& y, const TimeGrid& grid, int last_node, Rhs&& rhs,
             Observer&& observe) {
  const std::size_t n = y.size();
  std::vector<S> k1(n), k2(n), k3(n), k4(n), tmp(n);
  const double h = grid.step();
  const double half = 0.5 * h;
  const double sixth = h / 6.0;
  observe(0, y);
  for (int s = 0; s < last_node; ++s) {
    const double t = grid.time(s);
    rhs(s, t, y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + half * k1[i];
    rhs(s, t + half, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + half * k2[i];
    rhs(s, t + half, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    rhs(s, t + h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = y[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    for (std::size_t i = 0; i < n; ++i) {
      if (!is_finite(y[i])) {
        std::ostringstream msg;
        msg << "integration blow-up at t = " << grid.time(s + 1);
        throw IntegrationError(grid.time(s + 1), msg.str());
      }
    }
    observe(s + 1, y);
  }
}

}  // namespace oed::detail
