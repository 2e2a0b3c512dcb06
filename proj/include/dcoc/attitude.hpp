#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "dcoc/core.hpp"

namespace dcoc {

/// Spacecraft bus with p reaction wheels.
struct AttitudeParams {
  /// Principal bus inertias J1, J2, J3 (kg·m²).
  Vector inertia = Vector{{430.0, 1210.0, 1300.0}};
  double wheel_inertia = 0.043;
  /// 3×p, unit spin-axis columns.
  Matrix wheel_axes = Matrix::Identity(3, 3);
  /// Bus edge lengths L_x, L_y, L_z (m).
  Vector dimensions = Vector{{2.0, 2.5, 5.0}};
  /// Center of mass offset from the geometric center (m).
  Vector com_offset = Vector{{0.0, 0.5, 0.0}};
  double solar_flux = 1367.0;
  double diffusion = 0.2;
  /// Inertial sun direction, unit norm.
  Vector sun_direction = Vector::Constant(3, 1.0 / std::sqrt(3.0));
  double speed_of_light = 299792458.0;

  int wheels() const { return static_cast<int>(wheel_axes.cols()); }
  /// J̄ = J + J_w W Wᵀ.
  Matrix locked_inertia() const;
  /// Throws parameter errors on violated invariants.
  void validate() const;
};

/// Euler-angle rate matrix: (φ̇, θ̇, ψ̇) = K(φ, θ) ω.
/// Throws gimbal_singularity when |cos θ| ≤ 1e-6.
Matrix euler_kinematics_matrix(double phi, double theta);

/// Inertial-to-body rotation of a 3-2-1 sequence, R1(φ) R2(θ) R3(ψ).
Matrix dcm_321(double phi, double theta, double psi);

Matrix skew(const Vector& v);

/// Solar radiation pressure torque of a flat-plate cuboid in body axes.
Vector srp_torque(double phi, double theta, double psi,
                  const AttitudeParams& params);

/// ∂τ/∂(φ, θ, ψ), 3×3.
Matrix srp_torque_jacobian(double phi, double theta, double psi,
                           const AttitudeParams& params);

/// ẋ for x = (φ, θ, ψ, ω, ν) and u = ν̇.
Vector continuous_dynamics(const Vector& x, const Vector& u,
                           const AttitudeParams& params);

/// Same with an externally supplied disturbance torque.
Vector continuous_dynamics(const Vector& x, const Vector& u,
                           const AttitudeParams& params, const Vector& torque);

void continuous_jacobian(const Vector& x, const Vector& u,
                         const AttitudeParams& params, Matrix& dfdx,
                         Matrix& dfdu);

/// Explicit Euler step x + Δt·f(x, u).
Vector discretize_step(const Vector& x, const Vector& u, double dt,
                       const AttitudeParams& params);

/// h = J̄ω + J_w W ν.
Vector body_momentum(const Vector& x, const AttitudeParams& params);

/// Discrete dynamics with analytic Jacobians.
Dynamics attitude_dynamics(const AttitudeParams& params, double dt);

/// Bounds of one attitude scenario.
struct AttitudeScenario {
  std::string name;
  AttitudeParams params;
  double dt = 2.0;
  int horizon = 75;
  Vector x0;
  /// (lower, upper) for φ, θ, ψ.
  std::vector<std::pair<double, double>> angle_bounds;
  double wheel_min = 20.0;
  double wheel_max = 80.0;
  /// Cap on ‖u‖₁.
  double control_cap = 2.0;
  /// Literal reading: constrain ‖ν‖₁ instead of each wheel speed.
  bool wheel_bounds_one_norm = false;
};

AttitudeScenario scenario_3rw_nominal();
AttitudeScenario scenario_3rw_saturated();
AttitudeScenario scenario_2rw_nominal();
AttitudeScenario scenario_2rw_restricted();

DcocProblem make_attitude_problem(const AttitudeScenario& scenario);

/// Constraint row names, "phi", "theta", "psi", "nu1", ...
std::vector<std::string> attitude_state_names(int wheels);

}  // namespace dcoc
