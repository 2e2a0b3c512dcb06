#include "dcoc/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dcoc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
      return "invalid-argument";
    case ErrorKind::invalid_initial_state:
      return "invalid-initial-state";
    case ErrorKind::simulation_diverged:
      return "simulation-diverged";
    case ErrorKind::parameter:
      return "parameter";
    case ErrorKind::layout:
      return "layout";
    case ErrorKind::evaluation:
      return "evaluation";
    case ErrorKind::gimbal_singularity:
      return "gimbal-singularity";
    case ErrorKind::resource:
      return "resource";
    case ErrorKind::config:
      return "config";
  }
  return "unknown";
}

Matrix finite_difference_jacobian(
    const std::function<Vector(const Vector&)>& fn, const Vector& x) {
  Vector probe = x;
  Matrix jac;
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(x[i]));
    probe[i] = x[i] + h;
    Vector plus = fn(probe);
    probe[i] = x[i] - h;
    Vector minus = fn(probe);
    probe[i] = x[i];
    if (i == 0) {
      jac.resize(plus.size(), x.size());
    }
    jac.col(i) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

Dynamics Dynamics::from_linear(LinearModel model) {
  Dynamics dyn;
  dyn.state_dim = static_cast<int>(model.A.rows());
  dyn.control_dim = static_cast<int>(model.B.cols());
  if (model.A.cols() != model.A.rows() || model.B.rows() != model.A.rows() ||
      model.c.size() != model.A.rows()) {
    throw Error{ErrorKind::layout, "linear model dimensions disagree"};
  }
  dyn.step = [A = model.A, B = model.B, c = model.c](const Vector& x,
                                                     const Vector& u) {
    return Vector{A * x + B * u + c};
  };
  dyn.jacobian = [A = model.A, B = model.B](const Vector&, const Vector&,
                                            Matrix& dfdx, Matrix& dfdu) {
    dfdx = A;
    dfdu = B;
  };
  dyn.linear = std::move(model);
  return dyn;
}

void Dynamics::jacobians(const Vector& x, const Vector& u, Matrix& dfdx,
                         Matrix& dfdu) const {
  if (jacobian) {
    jacobian(x, u, dfdx, dfdu);
    return;
  }
  dfdx = finite_difference_jacobian([&](const Vector& xx) { return step(xx, u); },
                                    x);
  dfdu = finite_difference_jacobian([&](const Vector& uu) { return step(x, uu); },
                                    u);
}

StageConstraint StageConstraint::from_affine(Matrix G, Vector offset,
                                             Vector bound) {
  if (G.rows() != bound.size() || offset.size() != bound.size()) {
    throw Error{ErrorKind::layout, "affine constraint dimensions disagree"};
  }
  StageConstraint c;
  c.h_fn = [G, offset](const Vector& x) { return Vector{G * x + offset}; };
  c.derivative = [G](const Vector&) { return G; };
  c.bound = std::move(bound);
  c.affine = AffineMap{std::move(G), std::move(offset)};
  return c;
}

StageConstraint StageConstraint::box(const Vector& lower, const Vector& upper,
                                     const std::vector<std::string>& names) {
  const auto n = lower.size();
  std::vector<std::pair<int, double>> rows;  // (signed component + 1, bound)
  std::vector<std::string> groups;
  for (int i = 0; i < n; ++i) {
    const std::string name =
        i < static_cast<int>(names.size()) ? names[i] : "x" + std::to_string(i);
    if (std::isfinite(upper[i])) {
      rows.emplace_back(i + 1, upper[i]);
      groups.push_back(name);
    }
    if (std::isfinite(lower[i])) {
      rows.emplace_back(-(i + 1), -lower[i]);
      groups.push_back(name);
    }
  }
  Matrix G = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), n);
  Vector h(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int signed_index = rows[r].first;
    G(r, std::abs(signed_index) - 1) = signed_index > 0 ? 1.0 : -1.0;
    h[r] = rows[r].second;
  }
  Vector offset = Vector::Zero(h.size());
  auto c = from_affine(std::move(G), std::move(offset), std::move(h));
  c.row_groups = std::move(groups);
  return c;
}

Matrix StageConstraint::jacobian(const Vector& x) const {
  if (derivative) {
    return derivative(x);
  }
  return finite_difference_jacobian(h_fn, x);
}

ControlSet ControlSet::box(const Vector& lower, const Vector& upper) {
  ControlSet set;
  set.lower = lower;
  set.upper = upper;
  return set;
}

ControlSet ControlSet::one_norm(int dim, double cap) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  ControlSet set;
  set.lower = Vector::Constant(dim, -inf);
  set.upper = Vector::Constant(dim, inf);
  OneNormCap norm_cap;
  norm_cap.cap = cap;
  for (int i = 0; i < dim; ++i) {
    norm_cap.components.push_back(i);
  }
  set.one_norm_cap = std::move(norm_cap);
  return set;
}

void ControlSet::validate() const {
  if (lower.size() != upper.size()) {
    throw Error{ErrorKind::layout, "control bounds have different lengths"};
  }
  std::vector<bool> capped(lower.size(), false);
  if (one_norm_cap) {
    if (!(one_norm_cap->cap > 0.0)) {
      throw Error{ErrorKind::parameter, "1-norm cap must be positive"};
    }
    for (int c : one_norm_cap->components) {
      if (c < 0 || c >= dim()) {
        throw Error{ErrorKind::layout, "1-norm cap selects a missing component"};
      }
      capped[c] = true;
    }
  }
  for (int i = 0; i < dim(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i]) {
      throw Error{ErrorKind::parameter,
                  "control bounds require lower <= upper", i};
    }
    const bool boxed = std::isfinite(lower[i]) && std::isfinite(upper[i]);
    if (!boxed && !capped[i]) {
      throw Error{ErrorKind::parameter,
                  "control component " + std::to_string(i) + " is unbounded",
                  i};
    }
  }
  if (one_norm_floor && *one_norm_floor > 0.0) {
    throw Error{ErrorKind::parameter,
                "a positive 1-norm floor makes U nonconvex"};
  }
}

bool ControlSet::contains(const Vector& u, double tol) const {
  if (u.size() != dim()) {
    return false;
  }
  for (int i = 0; i < dim(); ++i) {
    if (!std::isfinite(u[i]) || u[i] < lower[i] - tol || u[i] > upper[i] + tol) {
      return false;
    }
  }
  if (one_norm_cap) {
    double norm = 0.0;
    for (int c : one_norm_cap->components) {
      norm += std::abs(u[c]);
    }
    if (norm > one_norm_cap->cap + tol) {
      return false;
    }
  }
  return true;
}

bool DcocProblem::is_linear() const {
  if (!dynamics.linear) {
    return false;
  }
  return std::all_of(constraints.begin(), constraints.end(),
                     [](const StageConstraint& c) { return c.affine.has_value(); });
}

void DcocProblem::validate(double tol_feas) const {
  if (horizon < 1) {
    throw Error{ErrorKind::parameter, "horizon must be at least 1"};
  }
  if (static_cast<int>(constraints.size()) != horizon + 1) {
    throw Error{ErrorKind::layout,
                "expected " + std::to_string(horizon + 1) +
                    " stage constraints, got " +
                    std::to_string(constraints.size())};
  }
  if (!dynamics.step || dynamics.state_dim < 1 || dynamics.control_dim < 1) {
    throw Error{ErrorKind::invalid_argument, "dynamics are not defined"};
  }
  if (x0.size() != state_dim()) {
    throw Error{ErrorKind::layout, "initial state has wrong dimension"};
  }
  if (control_set.dim() != control_dim()) {
    throw Error{ErrorKind::layout, "control set has wrong dimension"};
  }
  control_set.validate();
  for (int k = 0; k <= horizon; ++k) {
    if (constraints[k].rows() < 1 || !constraints[k].h_fn) {
      throw Error{ErrorKind::layout,
                  "stage " + std::to_string(k) + " has no constraint rows", k};
    }
  }
  if (!check_membership(x0, constraints[0], tol_feas).inside) {
    throw Error{ErrorKind::invalid_initial_state, "x0 is not in X(0)", 0};
  }
}

Membership check_membership(const Vector& x, const StageConstraint& c,
                            double tol_feas) {
  Membership m;
  m.margin = c.bound - c.evaluate(x);
  if (m.margin.size() != c.rows()) {
    throw Error{ErrorKind::layout, "constraint function returned wrong length"};
  }
  m.inside = m.margin.minCoeff() >= -tol_feas;
  return m;
}

Trajectory simulate(const DcocProblem& problem,
                    const std::vector<Vector>& controls) {
  const int n = problem.horizon;
  if (static_cast<int>(controls.size()) != n) {
    throw Error{ErrorKind::layout, "expected " + std::to_string(n) +
                                       " controls, got " +
                                       std::to_string(controls.size())};
  }
  Trajectory traj;
  traj.states.reserve(n + 1);
  traj.controls = controls;
  traj.states.push_back(problem.x0);
  for (int k = 0; k < n; ++k) {
    if (controls[k].size() != problem.control_dim() ||
        !controls[k].allFinite()) {
      throw Error{ErrorKind::invalid_argument,
                  "control " + std::to_string(k) + " is malformed", k};
    }
    Vector next = problem.dynamics.step(traj.states.back(), controls[k]);
    if (!next.allFinite()) {
      throw Error{ErrorKind::simulation_diverged,
                  "non-finite state at step " + std::to_string(k + 1), k + 1};
    }
    traj.states.push_back(std::move(next));
  }
  traj.stage_margins.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    traj.stage_margins.push_back(problem.constraints[k].bound -
                                 problem.constraints[k].evaluate(traj.states[k]));
  }
  return traj;
}

int time_before_exit(const Trajectory& traj,
                     const std::vector<StageConstraint>& constraints,
                     double tol_feas) {
  if (traj.states.size() != constraints.size()) {
    throw Error{ErrorKind::layout,
                "trajectory and constraint sequence lengths disagree"};
  }
  if (!check_membership(traj.states[0], constraints[0], tol_feas).inside) {
    throw Error{ErrorKind::invalid_initial_state, "x0 is not in X(0)", 0};
  }
  const int n = static_cast<int>(constraints.size()) - 1;
  int kappa = 0;
  for (int k = 1; k <= n; ++k) {
    if (!check_membership(traj.states[k], constraints[k], tol_feas).inside) {
      break;
    }
    kappa = k;
  }
  return kappa;
}

}  // namespace dcoc
