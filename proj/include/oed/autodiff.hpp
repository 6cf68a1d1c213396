#pragma once

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

namespace oed {

/// Upper bound on the number of control decision variables (N_u * n_u) that
/// can be differentiated through the integrator in forward mode.
inline constexpr int kMaxControlDirections = 48;

using Tangent =
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxControlDirections, 1>;

/// Forward-mode scalar carrying derivatives with respect to the control
/// decision variables.
using ADScalar = Eigen::AutoDiffScalar<Tangent>;

inline double value_of(double v) { return v; }
inline double value_of(const ADScalar& v) { return v.value(); }

}  // namespace oed
