#include "dcoc/linear_systems.hpp"

#include <limits>

namespace dcoc {

DcocProblem make_linear_problem(const LinearModel& model, const Vector& x0,
                                int horizon, const Vector& state_lower,
                                const Vector& state_upper,
                                ControlSet control_set,
                                const std::vector<std::string>& state_names) {
  DcocProblem p;
  p.dynamics = Dynamics::from_linear(model);
  p.horizon = horizon;
  p.x0 = x0;
  p.control_set = std::move(control_set);
  p.constraints.assign(horizon + 1,
                       StageConstraint::box(state_lower, state_upper, state_names));
  return p;
}

DcocProblem make_double_integrator(double dt, int horizon, const Vector& x0,
                                   double position_bound, double control_bound) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  LinearModel model;
  model.A = Matrix{{1.0, dt}, {0.0, 1.0}};
  model.B = Matrix{{0.0}, {dt}};
  model.c = Vector::Zero(2);
  return make_linear_problem(
      model, x0, horizon, Vector{{-position_bound, -inf}},
      Vector{{position_bound, inf}},
      ControlSet::box(Vector::Constant(1, -control_bound),
                      Vector::Constant(1, control_bound)),
      {"p", "v"});
}

}  // namespace dcoc
