#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "dcoc/core.hpp"
#include "test_problems.hpp"

using namespace dcoc;

namespace {

StageConstraint upper_bound_row(double h) {
  return StageConstraint::from_affine(Matrix::Ones(1, 1), Vector::Zero(1),
                                      Vector::Constant(1, h));
}

/// Definition of time-before-exit applied literally: collect every k in
/// [1, N] whose prefix is feasible and take the max.
int literal_kappa(const Trajectory& traj,
                  const std::vector<StageConstraint>& cons, double tol) {
  const int n = static_cast<int>(cons.size()) - 1;
  std::vector<int> qualifying;
  for (int k = 1; k <= n; ++k) {
    bool all = true;
    for (int i = 0; i <= k; ++i) {
      const Vector h = cons[i].h_fn(traj.states[i]);
      for (int r = 0; r < h.size(); ++r) {
        all = all && h[r] <= cons[i].bound[r] + tol;
      }
    }
    if (all) {
      qualifying.push_back(k);
    }
  }
  return qualifying.empty() ? 0 : qualifying.back();
}

Trajectory scalar_trajectory(const std::vector<double>& xs) {
  Trajectory t;
  for (double x : xs) {
    t.states.push_back(Vector::Constant(1, x));
  }
  t.controls.assign(xs.size() - 1, Vector::Zero(1));
  return t;
}

}  // namespace

TEST_CASE("simulate: identity dynamics keeps every state at x0") {
  Dynamics dyn;
  dyn.state_dim = 2;
  dyn.control_dim = 1;
  dyn.step = [](const Vector& x, const Vector&) { return x; };
  DcocProblem p;
  p.dynamics = dyn;
  p.horizon = 4;
  p.x0 = Vector{{0.3, -0.2}};
  p.constraints.assign(5, StageConstraint::box(Vector::Constant(2, -1.0),
                                               Vector::Constant(2, 1.0)));
  p.control_set = ControlSet::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  std::vector<Vector> controls{Vector::Constant(1, 1.0), Vector::Constant(1, -0.5),
                               Vector::Constant(1, 0.2), Vector::Constant(1, 0.0)};
  const auto traj = simulate(p, controls);
  REQUIRE(traj.states.size() == 5);
  for (const auto& x : traj.states) {
    CHECK(x == p.x0);
  }
  CHECK(time_before_exit(traj, p.constraints) == 4);
}

TEST_CASE("simulate: double integrator two Euler steps") {
  auto p = test::double_integrator(1.0, 2, Vector{{0.0, 0.0}}, 10.0, 10.0);
  const auto traj = simulate(p, {Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)});
  CHECK(traj.states[1] == Vector{{0.0, 1.0}});
  CHECK(traj.states[2] == Vector{{1.0, 2.0}});
  REQUIRE(traj.stage_margins.size() == 3);
  // Rows: p ≤ 10, −p ≤ 10 → margins 10 − p, 10 + p at stage 2.
  CHECK(traj.stage_margins[2][0] == doctest::Approx(9.0));
  CHECK(traj.stage_margins[2][1] == doctest::Approx(11.0));
}

TEST_CASE("simulate: wrong control count and divergence are reported") {
  auto p = test::double_integrator(1.0, 3, Vector{{0.0, 0.0}}, 1.0, 1.0);
  CHECK_THROWS_AS(simulate(p, {Vector::Zero(1)}), Error);

  Dynamics blowup;
  blowup.state_dim = 1;
  blowup.control_dim = 1;
  blowup.step = [](const Vector& x, const Vector& u) {
    return Vector{x.array() * 1e300 + u.array()};
  };
  p.dynamics = blowup;
  p.x0 = Vector::Constant(1, 1.0);
  p.constraints.assign(4, upper_bound_row(1.0));
  try {
    simulate(p, std::vector<Vector>(3, Vector::Zero(1)));
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::simulation_diverged);
    CHECK(e.index() == 2);
  }
}

TEST_CASE("time_before_exit follows the prefix definition") {
  std::vector<StageConstraint> cons(6, upper_bound_row(1.0));

  SUBCASE("all stages feasible gives N") {
    CHECK(time_before_exit(scalar_trajectory({0, 0, 0, 0, 0, 0}), cons) == 5);
  }
  SUBCASE("x1 infeasible gives 0") {
    CHECK(time_before_exit(scalar_trajectory({0, 2, 0, 0, 0, 0}), cons) == 0);
  }
  SUBCASE("re-entry after exit does not count") {
    CHECK(time_before_exit(scalar_trajectory({0, 0, 0, 0, 2, 0}), cons) == 3);
  }
  SUBCASE("x0 outside X(0) is rejected") {
    try {
      time_before_exit(scalar_trajectory({2, 0, 0, 0, 0, 0}), cons);
      FAIL("expected invalid-initial-state");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_initial_state);
    }
  }
  SUBCASE("length mismatch is a layout error") {
    CHECK_THROWS_AS(time_before_exit(scalar_trajectory({0, 0}), cons), Error);
  }
}

TEST_CASE("check_membership margins and tolerance") {
  const auto c = upper_bound_row(1.0);
  auto m = check_membership(Vector::Constant(1, 0.5), c, 1e-9);
  CHECK(m.margin[0] == doctest::Approx(0.5));
  CHECK(m.inside);

  m = check_membership(Vector::Constant(1, 1.0 + 1e-12), c, 1e-9);
  CHECK(m.inside);

  m = check_membership(Vector::Constant(1, 2.0), c, 1e-9);
  CHECK(m.margin[0] == doctest::Approx(-1.0));
  CHECK_FALSE(m.inside);
}

TEST_CASE("property: membership boolean matches min margin") {
  std::mt19937_64 rng{7};
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int nx = 1 + trial % 4;
    Matrix G(3, nx);
    for (int i = 0; i < G.size(); ++i) G.data()[i] = u(rng);
    Vector h(3);
    for (int i = 0; i < 3; ++i) h[i] = u(rng);
    const auto c = StageConstraint::from_affine(G, Vector::Zero(3), h);
    Vector x(nx);
    for (int i = 0; i < nx; ++i) x[i] = u(rng);
    const double tol = std::pow(10.0, -1.0 - trial % 10);
    const auto m = check_membership(x, c, tol);
    CHECK(m.inside == (m.margin.minCoeff() >= -tol));
    CHECK((m.margin - (h - G * x)).lpNorm<Eigen::Infinity>() < 1e-15);
  }
}

TEST_CASE("property: kappa agrees with literal scan and is monotone under weakening") {
  std::mt19937_64 rng{11};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 12;
    const int nx = 2;
    std::vector<StageConstraint> cons;
    for (int k = 0; k <= n; ++k) {
      Matrix G(3, nx);
      for (int i = 0; i < G.size(); ++i) G.data()[i] = u(rng);
      cons.push_back(StageConstraint::from_affine(G, Vector::Zero(3),
                                                  Vector::Constant(3, 0.6)));
    }
    Trajectory traj;
    traj.states.push_back(Vector::Zero(nx));  // always inside (h > 0)
    for (int k = 1; k <= n; ++k) {
      traj.states.push_back(Vector{{0.4 * u(rng), 0.4 * u(rng)}});
    }
    traj.controls.assign(n, Vector::Zero(1));

    const int kappa = time_before_exit(traj, cons);
    CHECK(kappa == literal_kappa(traj, cons, kDefaultFeasTol));

    // Drop the last row of every stage.
    auto weaker = cons;
    for (auto& c : weaker) {
      const auto& a = *c.affine;
      c = StageConstraint::from_affine(a.G.topRows(2), a.offset.head(2),
                                       c.bound.head(2));
    }
    CHECK(time_before_exit(traj, weaker) >= kappa);
  }
}

TEST_CASE("property: simulate is bitwise deterministic") {
  auto p = test::scalar_drift(8);
  std::mt19937_64 rng{3};
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Vector> controls;
  for (int k = 0; k < 8; ++k) controls.push_back(Vector::Constant(1, u(rng)));
  const auto a = simulate(p, controls);
  const auto b = simulate(p, controls);
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(std::memcmp(a.states[k].data(), b.states[k].data(), sizeof(double)) == 0);
  }
}

TEST_CASE("problem validation") {
  auto p = test::scalar_drift(5);
  CHECK_NOTHROW(p.validate());

  auto bad = p;
  bad.horizon = 0;
  CHECK_THROWS_AS(bad.validate(), Error);

  bad = p;
  bad.constraints.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);

  bad = p;
  bad.x0 = Vector::Constant(1, -1.0);
  try {
    bad.validate();
    FAIL("expected invalid-initial-state");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_initial_state);
  }

  bad = p;
  bad.control_set.lower[0] = 1.0;
  bad.control_set.upper[0] = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);

  bad = p;
  bad.control_set.one_norm_floor = 0.5;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("stage constraint finite-difference fallback matches analytic Jacobian") {
  StageConstraint c;
  c.h_fn = [](const Vector& x) {
    return Vector{{std::sin(x[0]) * x[1], x[0] * x[0] - std::exp(x[1])}};
  };
  c.bound = Vector::Zero(2);
  CHECK(c.uses_finite_differences());
  std::mt19937_64 rng{5};
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x{{u(rng), u(rng)}};
    Matrix exact(2, 2);
    exact << std::cos(x[0]) * x[1], std::sin(x[0]), 2 * x[0], -std::exp(x[1]);
    const Matrix fd = c.jacobian(x);
    for (int i = 0; i < 4; ++i) {
      const double a = exact.data()[i];
      CHECK(std::abs(fd.data()[i] - a) <= 1e-6 * std::max(1.0, std::abs(a)));
    }
  }
}
