#pragma once

#include <string>
#include <vector>

#include "dcoc/core.hpp"

namespace dcoc {

/// Linear DCOC instance with the same box X(k) at every stage.
/// Infinite entries of the bounds are dropped.
DcocProblem make_linear_problem(const LinearModel& model, const Vector& x0,
                                int horizon, const Vector& state_lower,
                                const Vector& state_upper,
                                ControlSet control_set,
                                const std::vector<std::string>& state_names = {});

/// Euler-discretized double integrator p⁺ = p + v·dt, v⁺ = v + u·dt with
/// |p| ≤ position_bound, velocity free, |u| ≤ control_bound.
DcocProblem make_double_integrator(double dt, int horizon, const Vector& x0,
                                   double position_bound, double control_bound);

}  // namespace dcoc
