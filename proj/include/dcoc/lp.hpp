#pragma once

#include "dcoc/core.hpp"

namespace dcoc {

/// min cᵀx  s.t.  A_le x ≤ b_le,  A_eq x = b_eq,  lower ≤ x ≤ upper.
/// Bounds may be infinite. Empty A_le / A_eq mean no rows of that kind.
struct LpProblem {
  Vector c;
  Matrix A_le;
  Vector b_le;
  Matrix A_eq;
  Vector b_eq;
  Vector lower;
  Vector upper;
};

enum class LpStatus { optimal, infeasible, unbounded, max_iter };

const char* to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::max_iter;
  Vector x;
  double objective = 0.0;
  int iterations = 0;
};

/// Dense two-phase tableau simplex with Bland's rule.
LpResult solve_lp(const LpProblem& lp, double tol = 1e-9);

}  // namespace dcoc
