#include <doctest.h>

#include <cmath>
#include <random>

#include "dcoc/solver.hpp"
#include "dcoc/transcription.hpp"
#include "test_problems.hpp"

using namespace dcoc;

namespace {

// min (x − 1)² s.t. −x ≥ 0.
NlpInstance bounded_parabola() {
  NlpInstance nlp;
  nlp.n_vars = 1;
  nlp.n_ineq = 1;
  nlp.cost = [](const Vector& z) { return (z[0] - 1.0) * (z[0] - 1.0); };
  nlp.cost_gradient = [](const Vector& z) {
    return Vector::Constant(1, 2.0 * (z[0] - 1.0));
  };
  nlp.ineq = [](const Vector& z) { return Vector::Constant(1, -z[0]); };
  nlp.ineq_jacobian = [](const Vector&) { return Matrix::Constant(1, 1, -1.0); };
  nlp.initial_guess = Vector::Constant(1, -3.0);
  return nlp;
}

// min x₁ + x₂ s.t. 2 − x₁² − x₂² ≥ 0.
NlpInstance disc_linear() {
  NlpInstance nlp;
  nlp.n_vars = 2;
  nlp.n_ineq = 1;
  nlp.cost = [](const Vector& z) { return z[0] + z[1]; };
  nlp.cost_gradient = [](const Vector&) { return Vector::Ones(2); };
  nlp.ineq = [](const Vector& z) {
    return Vector::Constant(1, 2.0 - z.squaredNorm());
  };
  nlp.ineq_jacobian = [](const Vector& z) {
    Matrix j(1, 2);
    j << -2.0 * z[0], -2.0 * z[1];
    return j;
  };
  nlp.initial_guess = Vector{{0.3, -0.2}};
  return nlp;
}

// Strictly convex quadratic with a linear equality and box rows.
NlpInstance convex_instance() {
  NlpInstance nlp;
  nlp.n_vars = 3;
  nlp.n_eq = 1;
  nlp.n_ineq = 6;
  const Vector target{{2.0, -1.0, 0.5}};
  nlp.cost = [target](const Vector& z) { return (z - target).squaredNorm(); };
  nlp.cost_gradient = [target](const Vector& z) {
    return Vector{2.0 * (z - target)};
  };
  nlp.eq = [](const Vector& z) { return Vector::Constant(1, z.sum() - 1.0); };
  nlp.eq_jacobian = [](const Vector&) { return Matrix::Ones(1, 3); };
  nlp.ineq = [](const Vector& z) {
    Vector c(6);
    c << 1.0 - z.array(), 1.0 + z.array();
    return c;
  };
  nlp.ineq_jacobian = [](const Vector&) {
    Matrix j(6, 3);
    j << -Matrix::Identity(3, 3), Matrix::Identity(3, 3);
    return j;
  };
  nlp.initial_guess = Vector::Zero(3);
  return nlp;
}

}  // namespace

TEST_CASE("solver: active bound with multiplier 2") {
  const auto nlp = bounded_parabola();
  const auto sol = solve(nlp, nlp.initial_guess);
  REQUIRE(sol.status == SolverStatus::optimal);
  CHECK(std::abs(sol.primal[0]) < 1e-8);
  CHECK(sol.multipliers[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("solver: linear cost on a disc") {
  const auto nlp = disc_linear();
  const auto sol = solve(nlp, nlp.initial_guess);
  REQUIRE(sol.status == SolverStatus::optimal);
  CHECK(sol.primal[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(sol.primal[1] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(sol.multipliers[0] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("solver: kkt residual examples") {
  const auto nlp = bounded_parabola();
  const Vector z = Vector::Zero(1);
  const Vector lam = Vector::Constant(1, 2.0);
  CHECK(kkt_residual(nlp, z, lam) < 1e-12);
  CHECK(kkt_residual(nlp, z + Vector::Constant(1, 1e-3), lam) >= 1e-4);
  CHECK(kkt_residual(nlp, z, lam + Vector::Constant(1, 1e-3)) >= 1e-4);

  // With zero multipliers at a strictly feasible point only stationarity is left.
  const auto disc = disc_linear();
  const Vector inside{{0.1, 0.2}};
  CHECK(kkt_residual(disc, inside, Vector::Zero(1)) ==
        doctest::Approx(disc.cost_gradient(inside).lpNorm<Eigen::Infinity>()));
}

TEST_CASE("solver: max violation is unscaled") {
  auto nlp = bounded_parabola();
  nlp.scaling.ineq_rows = Vector::Constant(1, 1e-4);
  CHECK(max_violation(nlp, Vector::Constant(1, 0.25)) == doctest::Approx(0.25));
  CHECK(max_violation(nlp, Vector::Constant(1, -0.25)) == 0.0);
}

TEST_CASE("solver: option validation") {
  SolverOptions o;
  CHECK_NOTHROW(o.validate());
  o.kkt_tol = 0.0;
  CHECK_THROWS_AS(o.validate(), Error);
  o = {};
  o.backtrack_ratio = 1.0;
  CHECK_THROWS_AS(o.validate(), Error);
  o = {};
  o.max_iter = 0;
  CHECK_THROWS_AS(o.validate(), Error);
}

TEST_CASE("property: accepted steps never increase the merit function") {
  for (const auto& nlp : {bounded_parabola(), disc_linear(), convex_instance()}) {
    const auto sol = solve(nlp, nlp.initial_guess);
    REQUIRE(sol.status == SolverStatus::optimal);
    for (const auto& step : sol.merit_log) {
      CHECK(step.after <= step.before + 1e-12 * (1.0 + std::abs(step.before)));
    }
  }
}

TEST_CASE("property: solve is deterministic") {
  const auto nlp = convex_instance();
  const auto a = solve(nlp, nlp.initial_guess);
  const auto b = solve(nlp, nlp.initial_guess);
  REQUIRE(a.primal.size() == b.primal.size());
  for (int i = 0; i < a.primal.size(); ++i) {
    CHECK(a.primal[i] == b.primal[i]);
  }
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("multi_start: one start equals a plain solve") {
  const auto nlp = disc_linear();
  const auto single = solve(nlp, nlp.initial_guess);
  const auto ms = multi_start(nlp, 1, 7);
  REQUIRE(ms.status == SolverStatus::optimal);
  CHECK(ms.primal == single.primal);
}

TEST_CASE("property: multi-start runs agree on a convex instance") {
  const auto nlp = convex_instance();
  const auto ref = solve(nlp, nlp.initial_guess);
  REQUIRE(ref.status == SolverStatus::optimal);
  // z* = projection of the target onto {Σz = 1} ∩ [-1, 1]³.
  CHECK(ref.primal[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(ref.primal[1] == doctest::Approx(-0.75).epsilon(1e-7));
  CHECK(ref.primal[2] == doctest::Approx(0.75).epsilon(1e-7));
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto ms = multi_start(nlp, 5, seed);
    REQUIRE(ms.status == SolverStatus::optimal);
    CHECK((ms.primal - ref.primal).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("solver: transcribed linear problems reach zero cost when feasible") {
  // Scalar drift stays feasible for exactly 2 steps, so N = 2 has a zero-slack
  // optimum and N = 3 forces a positive final slack.
  auto p2 = test::scalar_drift(2);
  const auto nlp2 = build_nlp(p2, 1.1, default_big_m(p2));
  const auto s2 = solve(nlp2, nlp2.initial_guess);
  REQUIRE(s2.status == SolverStatus::optimal);
  CHECK(s2.objective < 1e-9);

  auto p3 = test::scalar_drift(3);
  const auto nlp3 = build_nlp(p3, 1.1, default_big_m(p3));
  const auto s3 = solve(nlp3, nlp3.initial_guess);
  REQUIRE(s3.status == SolverStatus::optimal);
  const auto ex = extract(nlp3, s3.primal, p3);
  CHECK(ex.kappa == 2);
  // x_3 = −0.5 at best, so ε_3 ≥ 0.5/M.
  CHECK(ex.slacks[3] == doctest::Approx(0.5 / nlp3.big_m).epsilon(1e-6));
  CHECK(ex.slacks[2] < 1e-9);
}

TEST_CASE("property: random linear transcriptions converge") {
  std::mt19937_64 rng{2024};
  int solved = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto p = test::random_linear(rng, 2 + trial % 3, 1 + trial % 2, 8);
    const auto nlp = build_nlp(p, 1.1, default_big_m(p));
    const auto sol = solve(nlp, nlp.initial_guess);
    if (sol.status == SolverStatus::optimal) {
      ++solved;
      CHECK(sol.max_violation <= 1e-9);
      CHECK(kkt_residual(nlp, sol.primal, sol.multipliers) <= 1e-6);
    }
  }
  CHECK(solved == 20);
}
