#include "dcoc/pipeline.hpp"

#include <cmath>

namespace dcoc {

PipelineResult solve_dcoc(const DcocProblem& problem, double theta, double big_m,
                          const PipelineOptions& opts) {
  if (!(opts.weight_ratio_cap > 1.0)) {
    throw Error{ErrorKind::parameter, "weight ratio cap must exceed 1"};
  }
  PipelineResult result;
  Vector warm;
  for (double th = theta;; th *= th) {
    const NlpInstance nlp = build_nlp(problem, th, big_m);
    SolverSolution sol;
    if (result.rounds.empty()) {
      sol = multi_start(nlp, opts.starts, opts.seed, opts.solver);
    } else {
      try {
        sol = solve(nlp, warm, opts.solver);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::evaluation &&
            e.kind() != ErrorKind::simulation_diverged &&
            e.kind() != ErrorKind::gimbal_singularity) {
          throw;
        }
        break;
      }
    }
    SolutionExtract ex = extract(nlp, sol.primal, problem);
    result.rounds.push_back({th, ex.kappa, sol.status, sol.iterations});
    result.total_iterations += sol.iterations;
    if (result.rounds.size() == 1 || ex.kappa > result.extract.kappa) {
      result.extract = std::move(ex);
      result.solution = sol;
      result.theta = th;
    }
    warm = sol.primal;
    const double next = th * th;
    if (!opts.theta_continuation || result.extract.kappa == problem.horizon ||
        problem.horizon * std::log(next) > std::log(opts.weight_ratio_cap)) {
      break;
    }
  }
  return result;
}

}  // namespace dcoc
