#pragma once

#include <cstdint>
#include <vector>

#include "dcoc/core.hpp"
#include "dcoc/solver.hpp"
#include "dcoc/transcription.hpp"

namespace dcoc {

struct PipelineOptions {
  int starts = 1;
  std::uint64_t seed = 0;
  SolverOptions solver;
  /// When the first solve exits early, re-solve with θ ← θ² from the previous
  /// solution while θ^N stays below weight_ratio_cap, keeping the controls with
  /// the longest achieved time-before-exit.
  bool theta_continuation = true;
  double weight_ratio_cap = 1e16;
};

struct ThetaRound {
  double theta = 0.0;
  int kappa = 0;
  SolverStatus status = SolverStatus::max_iter;
  int iterations = 0;
};

struct PipelineResult {
  SolutionExtract extract;
  SolverSolution solution;
  /// θ of the round whose controls were kept.
  double theta = 0.0;
  std::vector<ThetaRound> rounds;
  int total_iterations = 0;
};

/// Transcribe, solve (multi-start on the first round), extract.
PipelineResult solve_dcoc(const DcocProblem& problem, double theta, double big_m,
                          const PipelineOptions& opts = {});

}  // namespace dcoc
