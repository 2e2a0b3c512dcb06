#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dcoc/core.hpp"

namespace dcoc {

/// Named half-open index range [offset, offset + size) of the decision vector.
struct VariableRange {
  std::string name;
  int offset = 0;
  int size = 0;

  int end() const { return offset + size; }
};

/// Internal scaling used by the solver: it works on ẑ = z / variable and on
/// objective·f, ineq_rows·c_I, eq_rows·c_E. Empty vectors mean all ones.
struct NlpScaling {
  Vector variable;
  double objective = 1.0;
  Vector ineq_rows;
  Vector eq_rows;
};

/// Smooth NLP
///
///   min f(z)  s.t.  c_E(z) = 0,  c_I(z) ≥ 0.
///
/// The transcription fills the DCOC-specific members (layout, weights, θ, M);
/// hand-written problems may leave them empty.
struct NlpInstance {
  int n_vars = 0;
  int n_eq = 0;
  int n_ineq = 0;

  std::function<double(const Vector&)> cost;
  std::function<Vector(const Vector&)> cost_gradient;
  std::function<Vector(const Vector&)> eq;
  std::function<Matrix(const Vector&)> eq_jacobian;
  std::function<Vector(const Vector&)> ineq;
  std::function<Matrix(const Vector&)> ineq_jacobian;

  std::vector<VariableRange> layout;
  /// w_k = θ^{−k}, k = 0..N.
  Vector weights;
  double big_m = 0.0;
  double theta = 0.0;

  /// Deterministic default start point.
  Vector initial_guess;
  /// Draws a perturbed start for multi-start runs. Optional.
  std::function<Vector(std::mt19937_64&)> sample_start;
  NlpScaling scaling;

  const VariableRange* range(const std::string& name) const;
  Vector eval_eq(const Vector& z) const;
  Vector eval_ineq(const Vector& z) const;
  Matrix eval_eq_jacobian(const Vector& z) const;
  Matrix eval_ineq_jacobian(const Vector& z) const;
};

/// Fills nlp.scaling's row factors so every scaled constraint row has unit
/// max-gradient (in scaled variables) at z.
void scale_rows_at(NlpInstance& nlp, const Vector& z);

/// Worst relative discrepancy between the analytic cost gradient / constraint
/// Jacobians and central differences (step 1e-6·(1 + |z_i|)). Each entry is
/// normalized by the larger of 1 and the ∞-norm of its analytic row.
double nlp_gradients_check(const NlpInstance& nlp, const Vector& point);

}  // namespace dcoc
