#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dcoc/error.hpp"

namespace dcoc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Absolute per-row tolerance used when deciding whether x_k ∈ X(k).
inline constexpr double kDefaultFeasTol = 1e-8;

/// f_d(x, u) = A x + B u + c.
struct LinearModel {
  Matrix A;
  Matrix B;
  Vector c;
};

/// Discrete-time model x_{k+1} = f_d(x_k, u_k).
struct Dynamics {
  int state_dim = 0;
  int control_dim = 0;
  std::function<Vector(const Vector& x, const Vector& u)> step;
  /// Optional analytic Jacobians (∂f_d/∂x, ∂f_d/∂u). Central differences are
  /// used when unset.
  std::function<void(const Vector& x, const Vector& u, Matrix& dfdx,
                     Matrix& dfdu)>
      jacobian;
  /// Present only when `step` is exactly affine; the oracle uses it to switch
  /// to exact LP feasibility checks.
  std::optional<LinearModel> linear;

  static Dynamics from_linear(LinearModel model);

  bool uses_finite_differences() const { return !jacobian; }
  void jacobians(const Vector& x, const Vector& u, Matrix& dfdx,
                 Matrix& dfdu) const;
};

/// H(x) = G x + offset.
struct AffineMap {
  Matrix G;
  Vector offset;
};

/// One stage set X(k) = {x : H_k(x) ≤ h_k}.
struct StageConstraint {
  std::function<Vector(const Vector& x)> h_fn;
  Vector bound;
  /// Optional analytic Jacobian of h_fn.
  std::function<Matrix(const Vector& x)> derivative;
  std::optional<AffineMap> affine;
  /// Optional per-row group names ("phi", "theta", ...), used for reporting.
  std::vector<std::string> row_groups;

  static StageConstraint from_affine(Matrix G, Vector offset, Vector bound);
  /// Rows x_i ≤ upper_i and −x_i ≤ −lower_i for every finite bound.
  static StageConstraint box(const Vector& lower, const Vector& upper,
                             const std::vector<std::string>& names = {});

  int rows() const { return static_cast<int>(bound.size()); }
  Vector evaluate(const Vector& x) const { return h_fn(x); }
  Matrix jacobian(const Vector& x) const;
  bool uses_finite_differences() const { return !derivative; }
};

/// ‖u_S‖₁ ≤ cap over the selected components S.
struct OneNormCap {
  std::vector<int> components;
  double cap = 0.0;
};

/// Compact convex control admissible set U: optional box plus optional 1-norm
/// cap. A 1-norm floor is only accepted when it is non-positive, since a
/// positive floor makes U nonconvex.
struct ControlSet {
  Vector lower;
  Vector upper;
  std::optional<OneNormCap> one_norm_cap;
  std::optional<double> one_norm_floor;

  static ControlSet box(const Vector& lower, const Vector& upper);
  static ControlSet one_norm(int dim, double cap);

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
  bool contains(const Vector& u, double tol = kDefaultFeasTol) const;
};

struct DcocProblem {
  Dynamics dynamics;
  int horizon = 0;
  /// X(0) .. X(N), exactly horizon + 1 entries.
  std::vector<StageConstraint> constraints;
  ControlSet control_set;
  Vector x0;

  int state_dim() const { return dynamics.state_dim; }
  int control_dim() const { return dynamics.control_dim; }
  bool is_linear() const;
  /// Throws Error on any broken invariant, including x0 ∉ X(0).
  void validate(double tol_feas = kDefaultFeasTol) const;
};

struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> controls;
  /// h_k − H_k(x_k) for every stage.
  std::vector<Vector> stage_margins;

  int horizon() const { return static_cast<int>(controls.size()); }
};

struct Membership {
  Vector margin;
  bool inside = false;
};

Trajectory simulate(const DcocProblem& problem,
                    const std::vector<Vector>& controls);

Membership check_membership(const Vector& x, const StageConstraint& c,
                            double tol_feas = kDefaultFeasTol);

/// Largest k in [1, N] with x_i ∈ X(i) for all i ≤ k, or 0 when x_1 ∉ X(1).
int time_before_exit(const Trajectory& traj,
                     const std::vector<StageConstraint>& constraints,
                     double tol_feas = kDefaultFeasTol);

/// Central differences with step 1e-6·(1 + |x_i|).
Matrix finite_difference_jacobian(
    const std::function<Vector(const Vector&)>& fn, const Vector& x);

}  // namespace dcoc
