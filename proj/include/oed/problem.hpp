#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "oed/measure.hpp"
#include "oed/model.hpp"

namespace oed {

/// Full experimental setup: dynamics, sensors, control box, horizon, grids
/// and budget. Controls and sampling weights are piecewise constant on
/// uniform partitions of [0, T] into `control_intervals` and `weight_cells`
/// pieces; every weight cell is integrated with `steps_per_cell` RK4 steps.
struct ProblemSpec {
  ModelPtr model;
  double horizon = 0.0;
  Eigen::VectorXd x0;
  Eigen::VectorXd control_lower;  // per control dimension
  Eigen::VectorXd control_upper;
  int control_intervals = 1;
  int weight_cells = 1;
  int steps_per_cell = 10;
  NoiseSpec noise;
  int budget = 1;
  double min_separation = 0.0;

  int state_dim() const { return model->state_dim(); }
  int param_dim() const { return model->param_dim(); }
  int control_dim() const { return model->control_dim(); }
  int sensor_count() const { return model->sensor_count(); }
  double cell_width() const { return horizon / weight_cells; }
  int cells_per_interval() const { return weight_cells / control_intervals; }
  /// Number of u decision variables, N_u * n_u.
  int control_vars() const { return control_intervals * control_dim(); }
  /// Number of w decision variables, N_w * n_exp.
  int weight_vars() const { return weight_cells * sensor_count(); }
  /// Midpoint time of weight cell c.
  double cell_midpoint(int c) const { return (c + 0.5) * cell_width(); }
};

/// Throws ConfigurationError unless the spec is internally consistent:
/// T > 0, N_u >= 1, N_w a positive multiple of N_u, even steps_per_cell,
/// K >= 1, min_separation >= 0, matching dimensions, valid noise.
void validate(const ProblemSpec& spec);

bool same_problem(const ProblemSpec& a, const ProblemSpec& b);

/// Node times t_0 = 0 < ... < t_S = T of the integration grid.
class TimeGrid {
 public:
  explicit TimeGrid(const ProblemSpec& spec);

  int steps() const { return steps_; }
  int cells() const { return cells_; }
  int steps_per_cell() const { return steps_per_cell_; }
  double time(int node) const;
  double step() const { return horizon_ / steps_; }
  int cell_of_step(int s) const { return s / steps_per_cell_; }
  int interval_of_cell(int c) const { return c / cells_per_interval_; }
  int interval_of_step(int s) const { return interval_of_cell(cell_of_step(s)); }
  int cell_start_node(int c) const { return c * steps_per_cell_; }
  int cell_mid_node(int c) const {
    return c * steps_per_cell_ + steps_per_cell_ / 2;
  }
  /// Node closest to time t (used for activation times on midpoints).
  int node_of_time(double t) const;

 private:
  double horizon_;
  int steps_;
  int cells_;
  int steps_per_cell_;
  int cells_per_interval_;
};

}  // namespace oed
