#pragma once

#include <cmath>
#include <limits>
#include <random>

#include "dcoc/core.hpp"
#include "dcoc/linear_systems.hpp"

namespace dcoc::test {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// x⁺ = x + u − 1, |u| ≤ 0.5, X = {x ≥ 0}, x0 = 1.
inline DcocProblem scalar_drift(int horizon) {
  LinearModel m{Matrix::Ones(1, 1), Matrix::Ones(1, 1), Vector::Constant(1, -1.0)};
  return make_linear_problem(m, Vector::Constant(1, 1.0), horizon,
                             Vector::Constant(1, 0.0), Vector::Constant(1, kInf),
                             ControlSet::box(Vector::Constant(1, -0.5),
                                             Vector::Constant(1, 0.5)),
                             {"x"});
}

inline DcocProblem double_integrator(double dt, int horizon, const Vector& x0,
                                     double position_bound, double control_bound) {
  return make_double_integrator(dt, horizon, x0, position_bound, control_bound);
}

/// Random stable-ish linear system with a drift term, box state constraints
/// containing x0, and a box or 1-norm control set.
inline DcocProblem random_linear(std::mt19937_64& rng, int nx, int nu, int horizon) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LinearModel m;
  m.A = Matrix::Identity(nx, nx);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nx; ++j) {
      m.A(i, j) += 0.15 * u(rng);
    }
  }
  m.B = Matrix(nx, nu);
  for (int i = 0; i < m.B.size(); ++i) m.B.data()[i] = 0.3 * u(rng);
  m.c = Vector(nx);
  for (int i = 0; i < nx; ++i) m.c[i] = 0.25 * u(rng);
  Vector lo(nx);
  Vector hi(nx);
  Vector x0(nx);
  for (int i = 0; i < nx; ++i) {
    lo[i] = -1.0 - 0.5 * std::abs(u(rng));
    hi[i] = 1.0 + 0.5 * std::abs(u(rng));
    x0[i] = 0.5 * u(rng);
  }
  ControlSet set;
  if (u(rng) > 0.0) {
    set = ControlSet::box(Vector::Constant(nu, -0.3), Vector::Constant(nu, 0.3));
  } else {
    set = ControlSet::one_norm(nu, 0.4);
  }
  return make_linear_problem(m, x0, horizon, lo, hi, std::move(set));
}

}  // namespace dcoc::test
