#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dcoc/oracle.hpp"
#include "dcoc/scenario.hpp"
#include "dcoc/solver.hpp"

namespace dcoc {

/// First time (s) a constraint group leaves its set, or −1 when it never does.
struct GroupViolation {
  std::string group;
  double time = -1.0;
  int step = -1;
};

struct RunRecord {
  std::string name;
  std::string config_hash;
  int horizon = 0;
  int kappa = 0;
  double objective = 0.0;
  double big_m = 0.0;
  /// θ of the kept solution, and every θ tried.
  double theta = 0.0;
  std::vector<double> theta_rounds;
  std::string status;
  int iterations = 0;
  double kkt_residual = 0.0;
  double max_violation = 0.0;
  int starts = 1;
  std::vector<GroupViolation> first_violations;
  std::vector<std::string> files;

  bool ok() const { return status == "optimal" || status == "simulated"; }
};

/// Column names of the state vector for the configured system kind.
std::vector<std::string> state_names(const ScenarioConfig& config);

/// Group names in order of first appearance over all stages.
std::vector<std::string> constraint_groups(const DcocProblem& problem);

std::vector<GroupViolation> first_violation_times(
    const DcocProblem& problem, const Trajectory& traj, double dt,
    double tol_feas = kDefaultFeasTol);

/// One row per step: t, states, controls (blank at k = N), eps, and the
/// smallest margin of every constraint group. Floats use %.17g.
std::string trajectory_csv(const ScenarioConfig& config, const DcocProblem& problem,
                           const Trajectory& traj, const Vector& slacks);

/// Reads the control columns (u1..um) of a trajectory CSV, or a CSV whose
/// header is exactly u1..um. Rows with blank controls are skipped.
std::vector<Vector> read_controls_csv(const std::string& path, int control_dim);

std::string record_json(const RunRecord& record);

/// Builds, transcribes, solves, extracts, and writes trajectory.csv,
/// record.json and the SVG plots into config.output_dir.
RunRecord run_scenario(const ScenarioConfig& config);

/// Simulates a fixed control sequence and writes trajectory.csv with the
/// witness slacks, plus the plots.
RunRecord run_simulation(const ScenarioConfig& config,
                         const std::vector<Vector>& controls);

/// Runs the oracle and writes verdicts.csv and oracle.json. The grid method
/// needs a grid block in the config.
OracleReport run_oracle(const ScenarioConfig& config, OracleMethod method);

struct CheckItem {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct CheckReport {
  std::vector<CheckItem> items;
  bool passed() const;
};

/// Gradient checks of the transcription, the momentum identity for attitude
/// systems, κ consistency between extraction and simulation, and feasibility
/// of the slack witness for random control sequences.
CheckReport run_checks(const ScenarioConfig& config, int samples = 10);

/// Max relative residual of ḣ = τ_srp − ω×h over random attitude states.
double momentum_identity_error(const AttitudeScenario& scenario, int samples,
                               std::uint64_t seed);

/// Random admissible control sequences for a problem.
std::vector<Vector> random_admissible_controls(const DcocProblem& problem,
                                               std::mt19937_64& rng);

/// Writes SVG time histories (and the projected Euler-angle path for
/// attitude systems). Returns the written paths.
std::vector<std::string> write_plots(const ScenarioConfig& config,
                                     const DcocProblem& problem,
                                     const Trajectory& traj,
                                     const std::string& dir);

}  // namespace dcoc
