#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcoc/nlp.hpp"

namespace dcoc {

struct SolverOptions {
  /// Termination tolerance on the scaled KKT residual.
  double kkt_tol = 1e-7;
  /// Largest unscaled constraint violation accepted at termination.
  double feas_tol = 1e-9;
  int max_iter = 300;
  /// Merit penalty is raised to penalty_growth·‖λ‖∞ when it falls short.
  double penalty_growth = 2.0;
  /// Powell damping: enforce sᵀr ≥ bfgs_damping·sᵀBs.
  double bfgs_damping = 0.2;
  /// Floor on the curvature sᵀBs/sᵀs kept by each update (scaled space).
  double bfgs_min_curvature = 1e-6;
  double backtrack_ratio = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 30;

  void validate() const;
};

enum class SolverStatus {
  optimal,
  max_iter,
  infeasible_subproblem,
  line_search_failure,
};

const char* to_string(SolverStatus status);

/// One accepted line-search step of the ℓ₁ merit f + μ‖viol(c)‖₁.
struct MeritStep {
  double penalty = 0.0;
  double before = 0.0;
  double after = 0.0;
  double step = 0.0;
};

struct SolverSolution {
  Vector primal;
  /// One multiplier per constraint row, equalities first, for the unscaled
  /// problem: ∇f − Σ λ_i ∇c_i = 0.
  Vector multipliers;
  SolverStatus status = SolverStatus::max_iter;
  int iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
  /// Largest unscaled violation at `primal`.
  double max_violation = 0.0;
  std::vector<MeritStep> merit_log;
};

/// Dense line-search SQP: damped-BFGS quadratic model, Goldfarb–Idnani QP
/// subproblems, ℓ₁ merit backtracking with one second-order correction.
/// Works internally on nlp.scaling.
SolverSolution solve(const NlpInstance& nlp, const Vector& init,
                     const SolverOptions& opts = {});

/// max(stationarity, primal feasibility, dual feasibility, complementarity),
/// all ∞-norms in the instance's scaled coordinates. `multipliers` follows
/// SolverSolution::multipliers.
double kkt_residual(const NlpInstance& nlp, const Vector& primal,
                    const Vector& multipliers);

/// Largest violation of c_E = 0 and c_I ≥ 0 in unscaled units.
double max_violation(const NlpInstance& nlp, const Vector& primal);

/// Solves from nlp.initial_guess and from n_starts − 1 seeded perturbations
/// (nlp.sample_start, or Gaussian noise when unset). Returns the best
/// objective among optimal runs, else the least infeasible run. Starts whose
/// trajectory cannot be evaluated are skipped; throws when none can.
SolverSolution multi_start(const NlpInstance& nlp, int n_starts,
                           std::uint64_t seed, const SolverOptions& opts = {});

}  // namespace dcoc
