#include "dcoc/attitude.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

namespace dcoc {

namespace {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

Mat3 rot1(double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, s, 0, -s, c;
  return r;
}

Mat3 rot2(double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  Mat3 r;
  r << c, 0, -s, 0, 1, 0, s, 0, c;
  return r;
}

Mat3 rot3(double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  Mat3 r;
  r << c, s, 0, -s, c, 0, 0, 0, 1;
  return r;
}

// Derivatives of the elementary rotations with respect to their angle.
Mat3 drot1(double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  Mat3 r;
  r << 0, 0, 0, 0, -s, c, 0, -c, -s;
  return r;
}

Mat3 drot2(double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  Mat3 r;
  r << -s, 0, -c, 0, 0, 0, c, 0, -s;
  return r;
}

Mat3 drot3(double a) {
  const double c = std::cos(a);
  const double s = std::sin(a);
  Mat3 r;
  r << -s, c, 0, -c, -s, 0, 0, 0, 0;
  return r;
}

void check_gimbal(double theta) {
  if (std::abs(std::cos(theta)) <= 1e-6) {
    throw Error{ErrorKind::gimbal_singularity,
                "Euler kinematics are singular at theta = " +
                    std::to_string(theta)};
  }
}

struct Face {
  Vec3 normal;
  Vec3 arm;
  double area;
};

std::array<Face, 6> faces(const AttitudeParams& p) {
  const Vec3 dims = p.dimensions;
  const Vec3 offset = p.com_offset;
  const std::array<double, 3> area{dims[1] * dims[2], dims[0] * dims[2],
                                   dims[0] * dims[1]};
  std::array<Face, 6> out;
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      Vec3 n = Vec3::Zero();
      n[axis] = side == 0 ? 1.0 : -1.0;
      out[2 * axis + side] = {n, n * dims[axis] / 2.0 - offset, area[axis]};
    }
  }
  return out;
}

/// Torque and optionally ∂τ/∂ŝ for body-frame sun direction s.
Vec3 srp_from_sun(const Vec3& s, const AttitudeParams& p, Mat3* dtau_ds) {
  const double pressure = p.solar_flux / p.speed_of_light;
  const double cd = p.diffusion;
  Vec3 tau = Vec3::Zero();
  if (dtau_ds != nullptr) {
    dtau_ds->setZero();
  }
  for (const auto& f : faces(p)) {
    const double cos_a = f.normal.dot(s);
    if (cos_a <= 0.0) {
      continue;
    }
    const Vec3 dir = (1.0 - cd) * s + (2.0 / 3.0) * cd * f.normal;
    const Vec3 force = -pressure * f.area * cos_a * dir;
    tau += f.arm.cross(force);
    if (dtau_ds != nullptr) {
      const Mat3 dforce =
          -pressure * f.area *
          (dir * f.normal.transpose() + cos_a * (1.0 - cd) * Mat3::Identity());
      *dtau_ds += skew(f.arm) * dforce;
    }
  }
  return tau;
}

}  // namespace

Matrix AttitudeParams::locked_inertia() const {
  Matrix j = inertia.asDiagonal();
  return j + wheel_inertia * wheel_axes * wheel_axes.transpose();
}

void AttitudeParams::validate() const {
  auto fail = [](const std::string& what) {
    throw Error{ErrorKind::parameter, what};
  };
  if (inertia.size() != 3 || (inertia.array() <= 0.0).any()) {
    fail("bus inertias must be three positive numbers");
  }
  if (!(wheel_inertia > 0.0)) {
    fail("wheel inertia must be positive");
  }
  if (wheel_axes.rows() != 3 || wheels() < 2 || wheels() > 3) {
    fail("wheel axis matrix must be 3x2 or 3x3");
  }
  for (int i = 0; i < wheels(); ++i) {
    if (std::abs(wheel_axes.col(i).norm() - 1.0) > 1e-9) {
      fail("wheel axis " + std::to_string(i + 1) + " is not unit length");
    }
  }
  if (dimensions.size() != 3 || (dimensions.array() <= 0.0).any()) {
    fail("bus dimensions must be three positive numbers");
  }
  if (com_offset.size() != 3) {
    fail("center of mass offset needs three components");
  }
  if (sun_direction.size() != 3 ||
      std::abs(sun_direction.norm() - 1.0) > 1e-9) {
    fail("sun direction must be a unit vector");
  }
  if (!(solar_flux >= 0.0) || !(speed_of_light > 0.0)) {
    fail("solar flux must be nonnegative and c positive");
  }
  const Eigen::LLT<Matrix> llt(locked_inertia());
  if (llt.info() != Eigen::Success) {
    fail("locked inertia is not positive definite");
  }
}

Matrix skew(const Vector& v) {
  Matrix s(3, 3);
  s << 0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0;
  return s;
}

Matrix euler_kinematics_matrix(double phi, double theta) {
  check_gimbal(theta);
  const double sp = std::sin(phi);
  const double cp = std::cos(phi);
  const double st = std::sin(theta);
  const double ct = std::cos(theta);
  Matrix k(3, 3);
  k << ct, sp * st, cp * st, 0.0, cp * ct, -sp * ct, 0.0, sp, cp;
  return k / ct;
}

Matrix dcm_321(double phi, double theta, double psi) {
  return rot1(phi) * rot2(theta) * rot3(psi);
}

Vector srp_torque(double phi, double theta, double psi,
                  const AttitudeParams& params) {
  const Vec3 s = dcm_321(phi, theta, psi) * Vec3{params.sun_direction};
  return srp_from_sun(s, params, nullptr);
}

Matrix srp_torque_jacobian(double phi, double theta, double psi,
                           const AttitudeParams& params) {
  const Vec3 u = params.sun_direction;
  const Vec3 s = dcm_321(phi, theta, psi) * u;
  Mat3 dtau_ds;
  srp_from_sun(s, params, &dtau_ds);
  Mat3 ds;
  ds.col(0) = drot1(phi) * rot2(theta) * rot3(psi) * u;
  ds.col(1) = rot1(phi) * drot2(theta) * rot3(psi) * u;
  ds.col(2) = rot1(phi) * rot2(theta) * drot3(psi) * u;
  return dtau_ds * ds;
}

Vector continuous_dynamics(const Vector& x, const Vector& u,
                           const AttitudeParams& params, const Vector& torque) {
  const int p = params.wheels();
  if (x.size() != 6 + p || u.size() != p) {
    throw Error{ErrorKind::layout, "attitude state or control has wrong length"};
  }
  const Vector omega = x.segment(3, 3);
  const Vector nu = x.tail(p);
  const Matrix jbar = params.locked_inertia();
  const Matrix jw_w = params.wheel_inertia * params.wheel_axes;
  Vector xdot(6 + p);
  xdot.head(3) = euler_kinematics_matrix(x[0], x[1]) * omega;
  const Vector h = jbar * omega + jw_w * nu;
  xdot.segment(3, 3) =
      jbar.llt().solve(torque - skew(omega) * h - jw_w * u);
  xdot.tail(p) = u;
  return xdot;
}

Vector continuous_dynamics(const Vector& x, const Vector& u,
                           const AttitudeParams& params) {
  if (x.size() < 3) {
    throw Error{ErrorKind::layout, "attitude state has wrong length"};
  }
  return continuous_dynamics(x, u, params,
                             srp_torque(x[0], x[1], x[2], params));
}

void continuous_jacobian(const Vector& x, const Vector& u,
                         const AttitudeParams& params, Matrix& dfdx,
                         Matrix& dfdu) {
  const int p = params.wheels();
  const int n = 6 + p;
  if (x.size() != n || u.size() != p) {
    throw Error{ErrorKind::layout, "attitude state or control has wrong length"};
  }
  const double phi = x[0];
  const double theta = x[1];
  check_gimbal(theta);
  const Vector omega = x.segment(3, 3);
  const Vector nu = x.tail(p);
  const Matrix jbar = params.locked_inertia();
  const Eigen::LLT<Matrix> jbar_llt(jbar);
  const Matrix jw_w = params.wheel_inertia * params.wheel_axes;
  const Vector h = jbar * omega + jw_w * nu;

  dfdx = Matrix::Zero(n, n);
  dfdu = Matrix::Zero(n, p);

  const double sp = std::sin(phi);
  const double cp = std::cos(phi);
  const double st = std::sin(theta);
  const double ct = std::cos(theta);
  const double tt = st / ct;
  const double sec2 = 1.0 / (ct * ct);
  Matrix dk_dphi(3, 3);
  dk_dphi << 0.0, cp * tt, -sp * tt, 0.0, -sp, -cp, 0.0, cp / ct, -sp / ct;
  Matrix dk_dtheta(3, 3);
  dk_dtheta << 0.0, sp * sec2, cp * sec2, 0.0, 0.0, 0.0, 0.0, sp * st * sec2,
      cp * st * sec2;
  dfdx.block(0, 0, 3, 1) = dk_dphi * omega;
  dfdx.block(0, 1, 3, 1) = dk_dtheta * omega;
  dfdx.block(0, 3, 3, 3) = euler_kinematics_matrix(phi, theta);

  dfdx.block(3, 0, 3, 3) =
      jbar_llt.solve(srp_torque_jacobian(phi, theta, x[2], params));
  dfdx.block(3, 3, 3, 3) = -jbar_llt.solve(skew(omega) * jbar - skew(h));
  dfdx.block(3, 6, 3, p) = -jbar_llt.solve(skew(omega) * jw_w);
  dfdu.block(3, 0, 3, p) = -jbar_llt.solve(jw_w);
  dfdu.block(6, 0, p, p) = Matrix::Identity(p, p);
}

Vector discretize_step(const Vector& x, const Vector& u, double dt,
                       const AttitudeParams& params) {
  if (!(dt > 0.0)) {
    throw Error{ErrorKind::parameter, "time step must be positive"};
  }
  return x + dt * continuous_dynamics(x, u, params);
}

Vector body_momentum(const Vector& x, const AttitudeParams& params) {
  const int p = params.wheels();
  return params.locked_inertia() * x.segment(3, 3) +
         params.wheel_inertia * params.wheel_axes * x.tail(p);
}

Dynamics attitude_dynamics(const AttitudeParams& params, double dt) {
  params.validate();
  if (!(dt > 0.0)) {
    throw Error{ErrorKind::parameter, "time step must be positive"};
  }
  Dynamics dyn;
  dyn.state_dim = 6 + params.wheels();
  dyn.control_dim = params.wheels();
  dyn.step = [params, dt](const Vector& x, const Vector& u) {
    return discretize_step(x, u, dt, params);
  };
  dyn.jacobian = [params, dt](const Vector& x, const Vector& u, Matrix& dfdx,
                              Matrix& dfdu) {
    continuous_jacobian(x, u, params, dfdx, dfdu);
    dfdx *= dt;
    dfdx.diagonal().array() += 1.0;
    dfdu *= dt;
  };
  return dyn;
}

std::vector<std::string> attitude_state_names(int wheels) {
  std::vector<std::string> names{"phi", "theta", "psi", "omega1", "omega2",
                                 "omega3"};
  for (int i = 0; i < wheels; ++i) {
    names.push_back("nu" + std::to_string(i + 1));
  }
  return names;
}

namespace {

AttitudeScenario three_wheel_base() {
  AttitudeScenario s;
  s.params.wheel_axes = Matrix::Identity(3, 3);
  s.x0 = Vector{{-1e-3, 3.5e-4, -5e-4, -5e-4, 2e-4, 5e-4, 50.0, 50.0, 50.0}};
  s.angle_bounds = {{-0.003, 0.002}, {-0.00065, 0.00135}, {-0.01, 0.01}};
  s.wheel_min = 20.0;
  s.wheel_max = 80.0;
  s.control_cap = 2.0;
  return s;
}

Matrix two_wheel_axes(const Vector& second) {
  Matrix w(3, 2);
  w.col(0) = Vector::Constant(3, 1.0 / std::sqrt(3.0));
  w.col(1) = second;
  return w;
}

}  // namespace

AttitudeScenario scenario_3rw_nominal() {
  auto s = three_wheel_base();
  s.name = "3rw_nominal";
  return s;
}

AttitudeScenario scenario_3rw_saturated() {
  auto s = three_wheel_base();
  s.name = "3rw_saturated";
  s.x0[7] = 75.2;
  return s;
}

AttitudeScenario scenario_2rw_nominal() {
  AttitudeScenario s;
  s.name = "2rw_nominal";
  s.params.wheel_axes = two_wheel_axes(Vector{{1.0, 0.0, 0.0}});
  s.x0 = Vector{{-1e-3, 6e-4, -5e-4, -5e-4, 2e-4, 3e-4, 50.0, 50.0}};
  s.angle_bounds = {{-0.003, 0.002}, {-0.0014, 0.0026}, {-0.02, 0.02}};
  s.wheel_min = 20.0;
  s.wheel_max = 80.0;
  s.control_cap = 4.0;
  return s;
}

AttitudeScenario scenario_2rw_restricted() {
  AttitudeScenario s;
  s.name = "2rw_restricted";
  s.params.wheel_axes = two_wheel_axes(Vector{{0.0, 1.0, 0.0}});
  s.x0 = Vector{{1.0, 3e-4, -0.01, 4e-5, 4e-5, -5e-4, 80.0, 20.0}};
  s.angle_bounds = {{0.09, 1.01}, {-0.02, 0.02}, {-0.05, 0.05}};
  s.wheel_min = 20.0;
  s.wheel_max = 100.0;
  s.control_cap = 1.0;
  return s;
}

DcocProblem make_attitude_problem(const AttitudeScenario& scenario) {
  const auto& params = scenario.params;
  params.validate();
  const int p = params.wheels();
  const int nx = 6 + p;
  if (scenario.x0.size() != nx) {
    throw Error{ErrorKind::layout, "initial state needs " + std::to_string(nx) +
                                       " components"};
  }
  if (scenario.angle_bounds.size() != 3) {
    throw Error{ErrorKind::layout, "three angle bounds are required"};
  }
  if (scenario.horizon < 1) {
    throw Error{ErrorKind::parameter, "horizon must be at least 1"};
  }
  if (!(scenario.wheel_min <= scenario.wheel_max)) {
    throw Error{ErrorKind::parameter, "wheel speed bounds are inverted"};
  }
  constexpr double inf = std::numeric_limits<double>::infinity();

  DcocProblem problem;
  problem.dynamics = attitude_dynamics(params, scenario.dt);
  problem.horizon = scenario.horizon;
  problem.x0 = scenario.x0;
  problem.control_set = ControlSet::one_norm(p, scenario.control_cap);

  const auto names = attitude_state_names(p);
  StageConstraint stage;
  if (!scenario.wheel_bounds_one_norm) {
    Vector lo = Vector::Constant(nx, -inf);
    Vector hi = Vector::Constant(nx, inf);
    for (int i = 0; i < 3; ++i) {
      lo[i] = scenario.angle_bounds[i].first;
      hi[i] = scenario.angle_bounds[i].second;
    }
    lo.tail(p).setConstant(scenario.wheel_min);
    hi.tail(p).setConstant(scenario.wheel_max);
    stage = StageConstraint::box(lo, hi, names);
  } else {
    // Angle box rows followed by wheel_min ≤ ‖ν‖₁ ≤ wheel_max.
    Vector bound(8);
    for (int i = 0; i < 3; ++i) {
      bound[2 * i] = scenario.angle_bounds[i].second;
      bound[2 * i + 1] = -scenario.angle_bounds[i].first;
    }
    bound[6] = scenario.wheel_max;
    bound[7] = -scenario.wheel_min;
    stage.bound = bound;
    stage.h_fn = [p](const Vector& x) {
      Vector h(8);
      for (int i = 0; i < 3; ++i) {
        h[2 * i] = x[i];
        h[2 * i + 1] = -x[i];
      }
      const double norm = x.tail(p).lpNorm<1>();
      h[6] = norm;
      h[7] = -norm;
      return h;
    };
    stage.derivative = [p, nx](const Vector& x) {
      Matrix g = Matrix::Zero(8, nx);
      for (int i = 0; i < 3; ++i) {
        g(2 * i, i) = 1.0;
        g(2 * i + 1, i) = -1.0;
      }
      for (int j = 0; j < p; ++j) {
        const double sign = x[6 + j] >= 0.0 ? 1.0 : -1.0;
        g(6, 6 + j) = sign;
        g(7, 6 + j) = -sign;
      }
      return g;
    };
    stage.row_groups = {"phi", "phi", "theta", "theta", "psi", "psi",
                        "wheels", "wheels"};
  }
  problem.constraints.assign(scenario.horizon + 1, stage);
  problem.validate();
  return problem;
}

}  // namespace dcoc
