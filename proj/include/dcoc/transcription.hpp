#pragma once

#include <vector>

#include "dcoc/core.hpp"
#include "dcoc/nlp.hpp"

namespace dcoc {

enum class TranscriptionMode { single_shooting };

/// Result of slicing a solved decision vector back into DCOC terms.
struct SolutionExtract {
  std::vector<Vector> controls;
  Vector slacks;
  Trajectory trajectory;
  /// Achieved time-before-exit of the simulated controls.
  int kappa = 0;
  double objective = 0.0;
};

/// 10·max_k ‖h_k‖∞ + 10.
double default_big_m(const DcocProblem& problem);

/// Transcribes the exponentially weighted exit-time NLP
///
///   min Σ_k θ^{−k} ε_k
///   s.t. u_k ∈ U,  0 ≤ ε_0 ≤ ε_1 ≤ … ≤ ε_N,
///        h_k + M ε_k − H_k(x_k(u)) ≥ 0,  k = 0..N,
///
/// with states eliminated by forward simulation. The decision vector is
/// [u_0..u_{N−1}, ε_0..ε_N, s_0..s_{N−1}], where s_k are the split
/// auxiliaries of the 1-norm cap (absent when U has no cap).
///
/// Inequality rows are ordered: control box rows, 1-norm split rows
/// (s − u ≥ 0, s + u ≥ 0, cap − Σs ≥ 0 per step), slack chain rows, then
/// stage rows k = 0..N.
NlpInstance build_nlp(const DcocProblem& problem, double theta, double big_m,
                      TranscriptionMode mode = TranscriptionMode::single_shooting);

/// ε_k = max(0, max_{i≤k} max_rows (H_i(x_i) − h_i) / M) for the given controls.
Vector slack_witness(const DcocProblem& problem,
                     const std::vector<Vector>& controls, double big_m);

/// Packs controls into a decision vector with witness slacks and |u| splits.
Vector pack_point(const NlpInstance& nlp, const DcocProblem& problem,
                  const std::vector<Vector>& controls);

/// Σ_k θ^{N−k} ε_k, the unnormalized cost.
double exponential_cost(const NlpInstance& nlp, const Vector& z);

SolutionExtract extract(const NlpInstance& nlp, const Vector& primal,
                        const DcocProblem& problem,
                        double tol_feas = kDefaultFeasTol);

}  // namespace dcoc
