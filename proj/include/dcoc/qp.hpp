#pragma once

#include <vector>

#include "dcoc/core.hpp"

namespace dcoc {

/// Strictly convex dense QP
///
///   min ½ xᵀ G x + gᵀ x
///   s.t. A_eq x + b_eq = 0,  A_in x + b_in ≥ 0.
struct QpProblem {
  Matrix G;
  Vector g;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_in;
  Vector b_in;
};

enum class QpStatus { optimal, infeasible, not_convex, max_iter };

const char* to_string(QpStatus status);

struct QpResult {
  QpStatus status = QpStatus::infeasible;
  Vector x;
  Vector lambda_eq;
  /// Nonnegative multipliers of the inequality rows (zero when inactive).
  Vector lambda_in;
  double objective = 0.0;
  int iterations = 0;
  /// Active inequality rows at the solution.
  std::vector<int> active;
};

struct QpOptions {
  /// Rows with A_in x + b_in ≥ −violation_tol·(1 + |b_i|) count as satisfied.
  double violation_tol = 1e-11;
  int max_iter = 0;  ///< 0 → 10·(n + m) + 100
};

/// Goldfarb–Idnani dual active-set method. The most violated row enters
/// first; ties go to the lowest index.
QpResult solve_qp(const QpProblem& qp, const QpOptions& options = {});

}  // namespace dcoc
