#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcoc/attitude.hpp"
#include "dcoc/core.hpp"
#include "dcoc/solver.hpp"

namespace dcoc {

inline constexpr int kConfigSchemaVersion = 1;

enum class SystemKind { attitude_3rw, attitude_2rw, double_integrator, custom_linear };

const char* to_string(SystemKind kind);

/// Linear system block; infinite bounds are written as null in JSON.
struct LinearConfig {
  Matrix A;
  Matrix B;
  Vector c;
  Vector state_lower;
  Vector state_upper;
  Vector control_lower;
  Vector control_upper;
  std::optional<double> control_one_norm_cap;
  std::vector<std::string> state_names;
};

struct DoubleIntegratorConfig {
  double position_bound = 1.0;
  double control_bound = 1.0;
};

/// Optional grid for the grid-DP oracle: one axis per state as
/// (lower, upper, points), plus an explicit control list.
struct GridConfig {
  std::vector<std::array<double, 3>> axes;
  std::vector<Vector> controls;
};

struct ScenarioConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name;
  SystemKind system = SystemKind::attitude_3rw;
  int horizon = 75;
  double dt = 2.0;
  double theta = 1.1;
  /// Re-solve with θ ← θ² while the achieved exit time is below N.
  bool theta_continuation = true;
  /// Unset means 10·max‖h‖∞ + 10.
  std::optional<double> big_m;
  std::uint64_t seed = 0;
  int starts = 1;
  std::string output_dir;
  SolverOptions solver;
  Vector x0;

  AttitudeScenario attitude;
  LinearConfig linear;
  DoubleIntegratorConfig double_integrator;
  std::optional<GridConfig> grid;

  /// Testing aid: scale the dynamics Jacobian so gradient checks must fail.
  std::optional<double> corrupt_jacobian;
};

/// Parses and validates a configuration. Throws Error{config} on malformed
/// input, unknown keys, or violated preconditions (θ ≤ 1, M ≤ 0, ...).
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);
std::string dump_config(const ScenarioConfig& config);
void save_config(const ScenarioConfig& config, const std::string& path);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// fnv1a_hex of the canonical JSON dump.
std::string config_hash(const ScenarioConfig& config);

DcocProblem build_problem(const ScenarioConfig& config);

/// The JSON file of a bundled scenario, e.g. "3rw_nominal".
std::string bundled_scenario_path(const std::string& name);
std::vector<std::string> bundled_scenario_names();

}  // namespace dcoc
