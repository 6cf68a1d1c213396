#include "oed/problem.hpp"

#include <cmath>

#include "oed/error.hpp"

namespace oed {

void validate(const ProblemSpec& spec) {
  if (!spec.model) throw ConfigurationError("problem has no model");
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon))
    throw ConfigurationError("horizon must be positive");
  if (spec.x0.size() != spec.state_dim())
    throw ConfigurationError("x0 has the wrong length");
  const int nu = spec.control_dim();
  if (spec.control_lower.size() != nu || spec.control_upper.size() != nu)
    throw ConfigurationError("control bounds have the wrong length");
  for (int i = 0; i < nu; ++i)
    if (!(spec.control_lower[i] <= spec.control_upper[i]))
      throw ConfigurationError("control lower bound exceeds upper bound");
  if (spec.control_intervals < 1)
    throw ConfigurationError("control intervals must be >= 1");
  if (spec.weight_cells < 1 || spec.weight_cells % spec.control_intervals != 0)
    throw ConfigurationError(
        "weight cells must be a positive multiple of control intervals");
  if (spec.steps_per_cell < 2 || spec.steps_per_cell % 2 != 0)
    throw ConfigurationError("steps per cell must be even and >= 2");
  if (spec.budget < 1) throw ConfigurationError("budget must be >= 1");
  if (!(spec.min_separation >= 0.0))
    throw ConfigurationError("min_separation must be >= 0");
  if (spec.noise.sensors() != spec.sensor_count())
    throw ConfigurationError("noise spec does not match the sensor count");
  if (spec.sensor_count() > 8)
    throw ConfigurationError("at most 8 sensors are supported");
  validate(spec.noise);
}

bool same_problem(const ProblemSpec& a, const ProblemSpec& b) {
  if (!a.model || !b.model) return false;
  return a.model->name() == b.model->name() &&
         a.model->coefficients() == b.model->coefficients() &&
         a.horizon == b.horizon && a.x0 == b.x0 &&
         a.control_lower == b.control_lower &&
         a.control_upper == b.control_upper &&
         a.control_intervals == b.control_intervals &&
         a.weight_cells == b.weight_cells &&
         a.steps_per_cell == b.steps_per_cell &&
         a.noise.sigma == b.noise.sigma && a.noise.order == b.noise.order &&
         a.budget == b.budget && a.min_separation == b.min_separation;
}

TimeGrid::TimeGrid(const ProblemSpec& spec)
    : horizon_(spec.horizon),
      steps_(spec.weight_cells * spec.steps_per_cell),
      cells_(spec.weight_cells),
      steps_per_cell_(spec.steps_per_cell),
      cells_per_interval_(spec.weight_cells / spec.control_intervals) {
  validate(spec);
}

double TimeGrid::time(int node) const {
  if (node == steps_) return horizon_;
  return horizon_ * static_cast<double>(node) / static_cast<double>(steps_);
}

int TimeGrid::node_of_time(double t) const {
  const long node = std::lround(t / horizon_ * steps_);
  if (node < 0 || node > steps_)
    throw ArgumentError("time outside the horizon");
  return static_cast<int>(node);
}

}  // namespace oed
