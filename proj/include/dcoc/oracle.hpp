#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dcoc/core.hpp"
#include "dcoc/lp.hpp"
#include "dcoc/solver.hpp"

namespace dcoc {

enum class OracleMethod { sweep, grid_dp };

const char* to_string(OracleMethod method);

struct OracleOptions {
  /// Solver starts per feasibility check on nonlinear instances.
  int starts = 8;
  std::uint64_t seed = 0;
  double tol_feas = kDefaultFeasTol;
  SolverOptions solver;
  /// Largest (state grid points)·(N + 1) accepted by the grid DP.
  std::size_t grid_cap = 20'000'000;
};

struct OracleReport {
  int kappa_star = 0;
  /// verdicts[m − 1]: can the state stay in X(i) for all i ≤ m?
  std::vector<bool> verdicts;
  /// Horizons m that were actually checked; the rest follow by monotonicity.
  std::vector<int> evaluated;
  /// N controls whose simulation stays inside through kappa_star.
  std::vector<Vector> witness;
  OracleMethod method = OracleMethod::sweep;
  /// True when every verdict is exact (LP checks). Nonlinear sweeps and the
  /// grid DP only certify a lower bound.
  bool exact = false;
  /// "lp", "sqp" or "dp".
  std::string backend;
  /// Grid DP only: max time-before-exit of the gridded system from x0.
  int grid_estimate = -1;
};

/// Tensor-product state grid (one axis per state component) and a finite
/// list of admissible controls.
struct StateGrid {
  std::vector<std::vector<double>> axes;
};

/// Maximum time-before-exit by a sweep of hard feasibility problems over the
/// horizon, checking m = N first and then bisecting.
OracleReport kappa_star_sweep(const DcocProblem& problem,
                              const OracleOptions& opts = {});

/// Value iteration on the gridded system with nearest-neighbor projection,
/// followed by a greedy rollout of the grid policy on the true dynamics. The
/// reported kappa_star is the rollout's achieved time-before-exit.
OracleReport kappa_star_grid_dp(const DcocProblem& problem,
                                const StateGrid& state_grid,
                                const std::vector<Vector>& control_grid,
                                const OracleOptions& opts = {});

/// x_k = P_k [u_0; …; u_{N−1}] + q_k for linear dynamics, k = 0..N.
std::vector<AffineMap> affine_rollout(const DcocProblem& problem);

/// The transcription of a linear/affine instance written as an LP over
/// [u, ε, s] with the same cost Σ θ^{−k} ε_k.
LpProblem transcription_lp(const DcocProblem& problem, double theta,
                           double big_m);

}  // namespace dcoc
