#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcoc/report.hpp"
#include "dcoc/scenario.hpp"

using namespace dcoc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> theta;
  std::optional<double> big_m;
  std::optional<int> starts;
  std::optional<std::string> out;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "RNG seed for multi-start");
  cmd->add_option("--theta", o.theta, "weight base, must exceed 1");
  cmd->add_option("--big-m", o.big_m, "slack gain M");
  cmd->add_option("--starts", o.starts, "number of solver starts");
  cmd->add_option("--out", o.out, "output directory");
}

/// A path to a JSON file, or the name of a bundled scenario.
ScenarioConfig load(const std::string& ref, const Overrides& o) {
  ScenarioConfig c;
  if (std::filesystem::exists(ref)) {
    c = load_config(ref);
  } else if (std::filesystem::exists(bundled_scenario_path(ref))) {
    c = load_config(bundled_scenario_path(ref));
  } else {
    throw Error{ErrorKind::config, "no config file or bundled scenario named " + ref};
  }
  if (o.seed) c.seed = *o.seed;
  if (o.theta) c.theta = *o.theta;
  if (o.big_m) c.big_m = *o.big_m;
  if (o.starts) c.starts = *o.starts;
  if (o.out) c.output_dir = *o.out;
  // Re-parsing the canonical dump applies every load-time check to the overrides.
  return parse_config(dump_config(c));
}

void print_record(const RunRecord& r) {
  std::printf("scenario      %s\n", r.name.c_str());
  std::printf("config hash   %s\n", r.config_hash.c_str());
  std::printf("status        %s (%d iterations, kkt %.3e, violation %.3e)\n",
              r.status.c_str(), r.iterations, r.kkt_residual, r.max_violation);
  std::printf("kappa         %d of %d\n", r.kappa, r.horizon);
  std::printf("objective     %.17g\n", r.objective);
  for (const auto& v : r.first_violations) {
    if (v.step < 0) {
      std::printf("  %-10s  no violation\n", v.group.c_str());
    } else {
      std::printf("  %-10s  first violation at t = %g s (step %d)\n", v.group.c_str(),
                  v.time, v.step);
    }
  }
  for (const auto& f : r.files) {
    std::printf("wrote %s\n", f.c_str());
  }
}

const std::map<std::string, std::string> kFigures = {
    {"fig1", "3rw_nominal"},
    {"fig2", "3rw_saturated"},
    {"fig3", "2rw_nominal"},
    {"fig4", "2rw_restricted"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drift counteraction optimal control via exit-time maximization"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_ref;

  auto* solve_cmd = app.add_subcommand("solve", "solve a scenario and write outputs");
  solve_cmd->add_option("config", config_ref, "config file or bundled scenario name")
      ->required();
  add_overrides(solve_cmd, o);

  std::string method = "sweep";
  auto* oracle_cmd = app.add_subcommand("oracle", "compute the maximal exit time");
  oracle_cmd->add_option("config", config_ref, "config file or bundled scenario name")
      ->required();
  oracle_cmd->add_option("--method", method, "sweep or grid-dp")
      ->check(CLI::IsMember({"sweep", "grid-dp"}));
  add_overrides(oracle_cmd, o);

  std::string controls_path;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate a control sequence from CSV");
  sim_cmd->add_option("config", config_ref, "config file or bundled scenario name")
      ->required();
  sim_cmd->add_option("--controls", controls_path, "CSV with columns u1..um")->required();
  add_overrides(sim_cmd, o);

  std::vector<std::string> check_refs;
  auto* check_cmd = app.add_subcommand("check", "derivative and model consistency checks");
  check_cmd->add_option("config", check_refs,
                        "config files or bundled names (default: all bundled)");
  add_overrides(check_cmd, o);

  std::string figure;
  auto* repro_cmd = app.add_subcommand("reproduce", "rerun one of the four attitude experiments");
  repro_cmd->add_option("figure", figure, "fig1, fig2, fig3 or fig4")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4"}));
  add_overrides(repro_cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*solve_cmd || *repro_cmd) {
      const std::string ref = *repro_cmd ? kFigures.at(figure) : config_ref;
      const RunRecord r = run_scenario(load(ref, o));
      print_record(r);
      return r.ok() ? kExitOk : kExitFailure;
    }
    if (*oracle_cmd) {
      const ScenarioConfig c = load(config_ref, o);
      const OracleReport rep =
          run_oracle(c, method == "sweep" ? OracleMethod::sweep : OracleMethod::grid_dp);
      std::printf("scenario      %s\n", c.name.c_str());
      std::printf("method        %s (%s, %s)\n", to_string(rep.method), rep.backend.c_str(),
                  rep.exact ? "exact" : "certified lower bound");
      std::printf("kappa*        %d of %d\n", rep.kappa_star, c.horizon);
      if (rep.grid_estimate >= 0) {
        std::printf("grid estimate %d\n", rep.grid_estimate);
      }
      std::printf("wrote %s/verdicts.csv and %s/oracle.json\n", c.output_dir.c_str(),
                  c.output_dir.c_str());
      return kExitOk;
    }
    if (*sim_cmd) {
      const ScenarioConfig c = load(config_ref, o);
      const int nu = build_problem(c).control_dim();
      const RunRecord r = run_simulation(c, read_controls_csv(controls_path, nu));
      print_record(r);
      return kExitOk;
    }
    if (*check_cmd) {
      if (check_refs.empty()) check_refs = bundled_scenario_names();
      bool all = true;
      for (const auto& ref : check_refs) {
        const ScenarioConfig c = load(ref, o);
        const CheckReport rep = run_checks(c);
        for (const auto& item : rep.items) {
          std::printf("%-18s %-20s %-4s value %.3e threshold %.1e\n", c.name.c_str(),
                      item.name.c_str(), item.passed ? "ok" : "FAIL", item.value,
                      item.threshold);
        }
        all = all && rep.passed();
      }
      return all ? kExitOk : kExitFailure;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
    const bool config_side = e.kind() == ErrorKind::config ||
                             e.kind() == ErrorKind::invalid_initial_state ||
                             e.kind() == ErrorKind::parameter ||
                             e.kind() == ErrorKind::invalid_argument;
    return config_side ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
