#include "dcoc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dcoc/attitude.hpp"
#include "dcoc/pipeline.hpp"
#include "dcoc/transcription.hpp"

namespace dcoc {

using json = nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const char* spec, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) {
      throw Error{ErrorKind::resource, "cannot create directory " + parent.string()};
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error{ErrorKind::resource, "cannot write " + path};
  }
  out << text;
  if (!out) {
    throw Error{ErrorKind::resource, "write failed for " + path};
  }
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

double resolved_big_m(const ScenarioConfig& config, const DcocProblem& problem) {
  return config.big_m ? *config.big_m : default_big_m(problem);
}

bool is_attitude(const ScenarioConfig& config) {
  return config.system == SystemKind::attitude_3rw ||
         config.system == SystemKind::attitude_2rw;
}

// ---- SVG ----

struct Series {
  std::string label;
  std::vector<double> t;
  std::vector<double> y;
  std::string color;
};

struct Panel {
  std::string title;
  std::string y_label;
  std::vector<Series> series;
  std::vector<double> bounds;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

constexpr double kPanelWidth = 640.0;
constexpr double kPanelHeight = 220.0;
constexpr double kMarginLeft = 80.0;
constexpr double kMarginRight = 120.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 40.0;

std::string svg_panel(const Panel& panel, double y0) {
  double tmin = std::numeric_limits<double>::infinity();
  double tmax = -tmin;
  double lo = tmin;
  double hi = -tmin;
  for (const auto& s : panel.series) {
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      tmin = std::min(tmin, s.t[i]);
      tmax = std::max(tmax, s.t[i]);
      if (std::isfinite(s.y[i])) {
        lo = std::min(lo, s.y[i]);
        hi = std::max(hi, s.y[i]);
      }
    }
  }
  for (double b : panel.bounds) {
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  if (!std::isfinite(tmin) || tmax <= tmin) {
    tmin = 0.0;
    tmax = 1.0;
  }
  if (!std::isfinite(lo)) {
    lo = -1.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5 * std::max(1e-6, std::abs(lo));
    hi += 0.5 * std::max(1e-6, std::abs(hi));
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double w = kPanelWidth - kMarginLeft - kMarginRight;
  const double h = kPanelHeight - kMarginTop - kMarginBottom;
  const double top = y0 + kMarginTop;
  auto px = [&](double t) { return kMarginLeft + w * (t - tmin) / (tmax - tmin); };
  auto py = [&](double y) { return top + h * (hi - y) / (hi - lo); };

  std::ostringstream o;
  o << "<text x=\"" << kMarginLeft << "\" y=\"" << fmt("%.1f", y0 + 18)
    << "\" font-size=\"14\">" << panel.title << "</text>\n";
  o << "<rect x=\"" << kMarginLeft << "\" y=\"" << fmt("%.1f", top) << "\" width=\""
    << w << "\" height=\"" << h << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = tmin + (tmax - tmin) * i / 4.0;
    const double y = lo + (hi - lo) * i / 4.0;
    o << "<text x=\"" << fmt("%.1f", px(t)) << "\" y=\"" << fmt("%.1f", top + h + 16)
      << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt("%.4g", t) << "</text>\n";
    o << "<text x=\"" << fmt("%.1f", kMarginLeft - 4) << "\" y=\""
      << fmt("%.1f", py(y) + 3) << "\" font-size=\"10\" text-anchor=\"end\">"
      << fmt("%.4g", y) << "</text>\n";
  }
  o << "<text x=\"" << fmt("%.1f", kMarginLeft + w / 2) << "\" y=\""
    << fmt("%.1f", top + h + 32) << "\" font-size=\"11\" text-anchor=\"middle\">t [s]</text>\n";
  o << "<text x=\"14\" y=\"" << fmt("%.1f", top + h / 2)
    << "\" font-size=\"11\" transform=\"rotate(-90 14 " << fmt("%.1f", top + h / 2)
    << ")\" text-anchor=\"middle\">" << panel.y_label << "</text>\n";
  for (double b : panel.bounds) {
    o << "<line x1=\"" << kMarginLeft << "\" x2=\"" << kMarginLeft + w << "\" y1=\""
      << fmt("%.2f", py(b)) << "\" y2=\"" << fmt("%.2f", py(b))
      << "\" stroke=\"#555\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (std::size_t k = 0; k < panel.series.size(); ++k) {
    const auto& s = panel.series[k];
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      o << fmt("%.2f", px(s.t[i])) << "," << fmt("%.2f", py(s.y[i]))
        << (i + 1 < s.t.size() ? " " : "");
    }
    o << "\"/>\n";
    const double ly = top + 12 + 16 * static_cast<double>(k);
    o << "<line x1=\"" << kMarginLeft + w + 10 << "\" x2=\"" << kMarginLeft + w + 30
      << "\" y1=\"" << fmt("%.1f", ly) << "\" y2=\"" << fmt("%.1f", ly) << "\" stroke=\""
      << s.color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << kMarginLeft + w + 34 << "\" y=\"" << fmt("%.1f", ly + 4)
      << "\" font-size=\"11\">" << s.label << "</text>\n";
  }
  return o.str();
}

std::string svg_document(const std::vector<Panel>& panels) {
  std::ostringstream o;
  const double height = kPanelHeight * static_cast<double>(panels.size());
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPanelWidth
    << "\" height=\"" << height << "\" viewBox=\"0 0 " << kPanelWidth << " " << height
    << "\" font-family=\"sans-serif\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    o << svg_panel(panels[i], kPanelHeight * static_cast<double>(i));
  }
  o << "</svg>\n";
  return o.str();
}

/// Oblique projection of the (φ, θ, ψ) path with every axis normalized to its
/// constraint interval, so the box is a unit cube.
std::string svg_angle_box(const AttitudeScenario& s, const Trajectory& traj) {
  const double size = 480.0;
  auto norm = [&](int i, double v) {
    const auto [lo, hi] = s.angle_bounds[static_cast<std::size_t>(i)];
    return (v - lo) / (hi - lo);
  };
  auto project = [&](double a, double b, double c) {
    const double scale = 260.0;
    const double x = 90.0 + scale * (a + 0.45 * b);
    const double y = size - 70.0 - scale * (c + 0.3 * b) * 0.9;
    return std::pair<double, double>{x, y};
  };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\""
    << size << "\" viewBox=\"0 0 " << size << " " << size
    << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  o << "<text x=\"20\" y=\"24\" font-size=\"14\">Euler angles against the constraint box</text>\n";
  for (int e = 0; e < 12; ++e) {
    // Cube edges: pick the varying axis and the two fixed corners.
    const int axis = e / 4;
    const int a = e % 2;
    const int b = (e / 2) % 2;
    double p0[3];
    double p1[3];
    p0[axis] = 0.0;
    p1[axis] = 1.0;
    p0[(axis + 1) % 3] = p1[(axis + 1) % 3] = a;
    p0[(axis + 2) % 3] = p1[(axis + 2) % 3] = b;
    const auto q0 = project(p0[0], p0[1], p0[2]);
    const auto q1 = project(p1[0], p1[1], p1[2]);
    o << "<line x1=\"" << fmt("%.2f", q0.first) << "\" y1=\"" << fmt("%.2f", q0.second)
      << "\" x2=\"" << fmt("%.2f", q1.first) << "\" y2=\"" << fmt("%.2f", q1.second)
      << "\" stroke=\"#888\" stroke-dasharray=\"5 3\"/>\n";
  }
  o << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& x = traj.states[k];
    const auto q = project(norm(0, x[0]), norm(1, x[1]), norm(2, x[2]));
    o << fmt("%.2f", q.first) << "," << fmt("%.2f", q.second)
      << (k + 1 < traj.states.size() ? " " : "");
  }
  o << "\"/>\n";
  const auto& x0 = traj.states.front();
  const auto q0 = project(norm(0, x0[0]), norm(1, x0[1]), norm(2, x0[2]));
  o << "<circle cx=\"" << fmt("%.2f", q0.first) << "\" cy=\"" << fmt("%.2f", q0.second)
    << "\" r=\"4\" fill=\"#d62728\"/>\n";
  const auto ax = project(1.08, 0.0, 0.0);
  const auto ay = project(0.0, 1.12, 0.0);
  const auto az = project(0.0, 0.0, 1.06);
  o << "<text x=\"" << fmt("%.1f", ax.first) << "\" y=\"" << fmt("%.1f", ax.second)
    << "\" font-size=\"12\">phi</text>\n";
  o << "<text x=\"" << fmt("%.1f", ay.first) << "\" y=\"" << fmt("%.1f", ay.second)
    << "\" font-size=\"12\">theta</text>\n";
  o << "<text x=\"" << fmt("%.1f", az.first) << "\" y=\"" << fmt("%.1f", az.second)
    << "\" font-size=\"12\">psi</text>\n";
  o << "</svg>\n";
  return o.str();
}

Series state_series(const Trajectory& traj, int index, double dt,
                    const std::string& label, const char* color) {
  Series s{label, {}, {}, color};
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    s.t.push_back(dt * static_cast<double>(k));
    s.y.push_back(traj.states[k][index]);
  }
  return s;
}

Series control_series(const Trajectory& traj, int index, double dt,
                      const std::string& label, const char* color) {
  Series s{label, {}, {}, color};
  for (std::size_t k = 0; k < traj.controls.size(); ++k) {
    s.t.push_back(dt * static_cast<double>(k));
    s.y.push_back(traj.controls[k][index]);
  }
  return s;
}

std::pair<double, double> state_bounds(const ScenarioConfig& config, int i) {
  const double inf = std::numeric_limits<double>::infinity();
  if (config.system == SystemKind::double_integrator) {
    return i == 0 ? std::pair{-config.double_integrator.position_bound,
                              config.double_integrator.position_bound}
                  : std::pair{-inf, inf};
  }
  return {config.linear.state_lower[i], config.linear.state_upper[i]};
}

RunRecord base_record(const ScenarioConfig& config, const DcocProblem& problem) {
  RunRecord r;
  r.name = config.name;
  r.config_hash = config_hash(config);
  r.horizon = problem.horizon;
  r.big_m = resolved_big_m(config, problem);
  r.theta = config.theta;
  r.starts = config.starts;
  return r;
}

void write_outputs(const ScenarioConfig& config, const DcocProblem& problem,
                   const Trajectory& traj, const Vector& slacks, RunRecord& record) {
  const std::string dir = config.output_dir;
  const std::string csv = join_path(dir, "trajectory.csv");
  write_text(csv, trajectory_csv(config, problem, traj, slacks));
  record.files.push_back(csv);
  for (auto& f : write_plots(config, problem, traj, dir)) {
    record.files.push_back(std::move(f));
  }
  const std::string rec = join_path(dir, "record.json");
  record.files.push_back(rec);
  write_text(rec, record_json(record));
}

}  // namespace

std::vector<std::string> state_names(const ScenarioConfig& config) {
  switch (config.system) {
    case SystemKind::attitude_3rw:
      return attitude_state_names(3);
    case SystemKind::attitude_2rw:
      return attitude_state_names(2);
    case SystemKind::double_integrator:
      return {"p", "v"};
    case SystemKind::custom_linear:
      break;
  }
  if (!config.linear.state_names.empty()) {
    return config.linear.state_names;
  }
  std::vector<std::string> names;
  for (int i = 0; i < config.linear.A.rows(); ++i) {
    names.push_back("x" + std::to_string(i + 1));
  }
  return names;
}

std::vector<std::string> constraint_groups(const DcocProblem& problem) {
  std::vector<std::string> groups;
  for (const auto& c : problem.constraints) {
    if (c.row_groups.empty() && c.rows() > 0 &&
        std::find(groups.begin(), groups.end(), "stage") == groups.end()) {
      groups.push_back("stage");
    }
    for (const auto& g : c.row_groups) {
      if (std::find(groups.begin(), groups.end(), g) == groups.end()) {
        groups.push_back(g);
      }
    }
  }
  return groups;
}

namespace {

const std::string& row_group(const StageConstraint& c, int row) {
  static const std::string kStage = "stage";
  return c.row_groups.empty() ? kStage : c.row_groups[static_cast<std::size_t>(row)];
}

}  // namespace

std::vector<GroupViolation> first_violation_times(const DcocProblem& problem,
                                                  const Trajectory& traj, double dt,
                                                  double tol_feas) {
  std::vector<GroupViolation> out;
  for (const auto& g : constraint_groups(problem)) {
    out.push_back({g, -1.0, -1});
  }
  for (std::size_t k = 0; k < traj.stage_margins.size(); ++k) {
    const auto& c = problem.constraints[k];
    const Vector& margin = traj.stage_margins[k];
    for (int r = 0; r < margin.size(); ++r) {
      if (margin[r] >= -tol_feas) continue;
      for (auto& v : out) {
        if (v.group == row_group(c, r) && v.step < 0) {
          v.step = static_cast<int>(k);
          v.time = dt * static_cast<double>(k);
        }
      }
    }
  }
  return out;
}

std::string trajectory_csv(const ScenarioConfig& config, const DcocProblem& problem,
                           const Trajectory& traj, const Vector& slacks) {
  const auto names = state_names(config);
  const auto groups = constraint_groups(problem);
  const int nu = problem.control_dim();
  std::ostringstream o;
  o << "t";
  for (const auto& n : names) o << "," << n;
  for (int i = 0; i < nu; ++i) o << ",u" << i + 1;
  o << ",eps";
  for (const auto& g : groups) o << ",margin_" << g;
  o << "\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    o << fmt17(config.dt * static_cast<double>(k));
    for (int i = 0; i < traj.states[k].size(); ++i) o << "," << fmt17(traj.states[k][i]);
    for (int i = 0; i < nu; ++i) {
      o << ",";
      if (k < traj.controls.size()) o << fmt17(traj.controls[k][i]);
    }
    o << "," << fmt17(slacks[static_cast<Eigen::Index>(k)]);
    std::map<std::string, double> minima;
    const auto& c = problem.constraints[k];
    const Vector& margin = traj.stage_margins[k];
    for (int r = 0; r < margin.size(); ++r) {
      const auto& g = row_group(c, r);
      auto it = minima.find(g);
      if (it == minima.end()) {
        minima.emplace(g, margin[r]);
      } else {
        it->second = std::min(it->second, margin[r]);
      }
    }
    for (const auto& g : groups) {
      o << ",";
      auto it = minima.find(g);
      if (it != minima.end()) o << fmt17(it->second);
    }
    o << "\n";
  }
  return o.str();
}

std::vector<Vector> read_controls_csv(const std::string& path, int control_dim) {
  std::ifstream in(path);
  if (!in) {
    throw Error{ErrorKind::config, "cannot read controls file " + path};
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error{ErrorKind::config, path + ": missing header"};
  }
  const auto header = split_csv_line(line);
  std::vector<int> columns;
  for (int i = 0; i < control_dim; ++i) {
    const std::string name = "u" + std::to_string(i + 1);
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error{ErrorKind::config, path + ": missing column " + name};
    }
    columns.push_back(static_cast<int>(it - header.begin()));
  }
  std::vector<Vector> controls;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw Error{ErrorKind::config, path + ": wrong field count on line " +
                                         std::to_string(line_no)};
    }
    Vector u(control_dim);
    int blanks = 0;
    for (int i = 0; i < control_dim; ++i) {
      const auto& f = fields[static_cast<std::size_t>(columns[static_cast<std::size_t>(i)])];
      if (f.empty()) {
        ++blanks;
        continue;
      }
      char* end = nullptr;
      u[i] = std::strtod(f.c_str(), &end);
      if (end != f.c_str() + f.size() || !std::isfinite(u[i])) {
        throw Error{ErrorKind::config, path + ": bad number on line " +
                                           std::to_string(line_no)};
      }
    }
    if (blanks == control_dim) continue;
    if (blanks > 0) {
      throw Error{ErrorKind::config, path + ": partial control row on line " +
                                         std::to_string(line_no)};
    }
    controls.push_back(u);
  }
  return controls;
}

std::string record_json(const RunRecord& r) {
  json j;
  j["name"] = r.name;
  j["config_hash"] = r.config_hash;
  j["horizon"] = r.horizon;
  j["kappa"] = r.kappa;
  j["objective"] = r.objective;
  j["big_m"] = r.big_m;
  j["theta"] = r.theta;
  j["theta_rounds"] = r.theta_rounds;
  j["solver"] = {{"status", r.status},
                 {"iterations", r.iterations},
                 {"kkt_residual", r.kkt_residual},
                 {"max_violation", r.max_violation},
                 {"starts", r.starts}};
  json viol = json::array();
  for (const auto& v : r.first_violations) {
    viol.push_back({{"group", v.group},
                    {"time", v.step < 0 ? json(nullptr) : json(v.time)},
                    {"step", v.step < 0 ? json(nullptr) : json(v.step)}});
  }
  j["first_violations"] = viol;
  j["files"] = r.files;
  return j.dump(2) + "\n";
}

std::vector<std::string> write_plots(const ScenarioConfig& config,
                                     const DcocProblem& problem,
                                     const Trajectory& traj, const std::string& dir) {
  std::vector<std::string> files;
  const double dt = config.dt;
  const int nu = problem.control_dim();
  auto emit = [&](const std::string& name, const std::string& text) {
    const std::string path = join_path(dir, name);
    write_text(path, text);
    files.push_back(path);
  };

  Panel controls{"Control inputs", "u", {}, {}};
  for (int i = 0; i < nu; ++i) {
    controls.series.push_back(
        control_series(traj, i, dt, "u" + std::to_string(i + 1), kPalette[i % 5]));
  }
  if (is_attitude(config)) {
    const auto& s = config.attitude;
    const int w = s.params.wheels();
    controls.bounds = {-s.control_cap, s.control_cap};
    emit("controls.svg", svg_document({controls}));

    Panel wheels{"Wheel speeds", "nu", {}, {}};
    if (s.wheel_bounds_one_norm) {
      Series total{"|nu|_1", {}, {}, kPalette[0]};
      for (std::size_t k = 0; k < traj.states.size(); ++k) {
        total.t.push_back(dt * static_cast<double>(k));
        total.y.push_back(traj.states[k].tail(w).lpNorm<1>());
      }
      wheels.series.push_back(total);
    } else {
      for (int i = 0; i < w; ++i) {
        wheels.series.push_back(
            state_series(traj, 6 + i, dt, "nu" + std::to_string(i + 1), kPalette[i % 5]));
      }
    }
    wheels.bounds = {s.wheel_min, s.wheel_max};
    emit("wheels.svg", svg_document({wheels}));

    const char* labels[] = {"phi", "theta", "psi"};
    std::vector<Panel> angles;
    for (int i = 0; i < 3; ++i) {
      const auto [lo, hi] = s.angle_bounds[static_cast<std::size_t>(i)];
      angles.push_back({std::string{"Euler angle "} + labels[i], std::string{labels[i]} + " [rad]",
                        {state_series(traj, i, dt, labels[i], kPalette[i])},
                        {lo, hi}});
    }
    emit("angles.svg", svg_document(angles));
    emit("angles_3d.svg", svg_angle_box(s, traj));
    return files;
  }

  const auto names = state_names(config);
  std::vector<Panel> states;
  for (int i = 0; i < problem.state_dim(); ++i) {
    Panel p{"State " + names[static_cast<std::size_t>(i)], names[static_cast<std::size_t>(i)],
            {state_series(traj, i, dt, names[static_cast<std::size_t>(i)], kPalette[i % 5])},
            {}};
    const auto [lo, hi] = state_bounds(config, i);
    if (std::isfinite(lo)) p.bounds.push_back(lo);
    if (std::isfinite(hi)) p.bounds.push_back(hi);
    states.push_back(std::move(p));
  }
  emit("states.svg", svg_document(states));
  if (config.system == SystemKind::double_integrator) {
    const double b = config.double_integrator.control_bound;
    controls.bounds = {-b, b};
  } else {
    for (int i = 0; i < nu; ++i) {
      if (std::isfinite(config.linear.control_lower[i])) {
        controls.bounds.push_back(config.linear.control_lower[i]);
      }
      if (std::isfinite(config.linear.control_upper[i])) {
        controls.bounds.push_back(config.linear.control_upper[i]);
      }
    }
  }
  emit("controls.svg", svg_document({controls}));
  return files;
}

RunRecord run_scenario(const ScenarioConfig& config) {
  const DcocProblem problem = build_problem(config);
  RunRecord record = base_record(config, problem);
  PipelineOptions opts;
  opts.starts = config.starts;
  opts.seed = config.seed;
  opts.solver = config.solver;
  opts.theta_continuation = config.theta_continuation;
  const PipelineResult result = solve_dcoc(problem, config.theta, record.big_m, opts);
  const SolutionExtract& ex = result.extract;
  const SolverSolution& sol = result.solution;
  record.kappa = ex.kappa;
  record.objective = ex.objective;
  record.theta = result.theta;
  for (const auto& r : result.rounds) record.theta_rounds.push_back(r.theta);
  record.status = to_string(sol.status);
  record.iterations = result.total_iterations;
  record.kkt_residual = sol.kkt_residual;
  record.max_violation = sol.max_violation;
  record.first_violations = first_violation_times(problem, ex.trajectory, config.dt);
  write_outputs(config, problem, ex.trajectory, ex.slacks, record);
  return record;
}

RunRecord run_simulation(const ScenarioConfig& config,
                         const std::vector<Vector>& controls) {
  const DcocProblem problem = build_problem(config);
  if (static_cast<int>(controls.size()) != problem.horizon) {
    throw Error{ErrorKind::config, "expected " + std::to_string(problem.horizon) +
                                       " control rows, got " +
                                       std::to_string(controls.size())};
  }
  RunRecord record = base_record(config, problem);
  const NlpInstance nlp = build_nlp(problem, config.theta, record.big_m);
  const Trajectory traj = simulate(problem, controls);
  const Vector z = pack_point(nlp, problem, controls);
  const Vector slacks = z.segment(nlp.range("slacks")->offset, problem.horizon + 1);
  record.kappa = time_before_exit(traj, problem.constraints);
  record.objective = nlp.cost(z);
  record.status = "simulated";
  record.max_violation = max_violation(nlp, z);
  record.starts = 0;
  record.first_violations = first_violation_times(problem, traj, config.dt);
  write_outputs(config, problem, traj, slacks, record);
  return record;
}

OracleReport run_oracle(const ScenarioConfig& config, OracleMethod method) {
  const DcocProblem problem = build_problem(config);
  OracleOptions opts;
  opts.starts = config.starts;
  opts.seed = config.seed;
  opts.solver = config.solver;
  OracleReport report;
  if (method == OracleMethod::sweep) {
    report = kappa_star_sweep(problem, opts);
  } else {
    if (!config.grid) {
      throw Error{ErrorKind::config, config.name + ": grid-dp needs a grid block"};
    }
    StateGrid grid;
    for (const auto& a : config.grid->axes) {
      const int n = static_cast<int>(a[2]);
      std::vector<double> axis(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        axis[static_cast<std::size_t>(i)] = a[0] + (a[1] - a[0]) * i / (n - 1);
      }
      grid.axes.push_back(std::move(axis));
    }
    report = kappa_star_grid_dp(problem, grid, config.grid->controls, opts);
  }

  std::ostringstream csv;
  csv << "m,evaluated,feasible\n";
  for (std::size_t i = 0; i < report.verdicts.size(); ++i) {
    const int m = static_cast<int>(i) + 1;
    const bool evaluated = std::find(report.evaluated.begin(), report.evaluated.end(),
                                     m) != report.evaluated.end();
    csv << m << "," << (evaluated ? 1 : 0) << "," << (report.verdicts[i] ? 1 : 0) << "\n";
  }
  write_text(join_path(config.output_dir, "verdicts.csv"), csv.str());

  json j;
  j["name"] = config.name;
  j["config_hash"] = config_hash(config);
  j["method"] = to_string(report.method);
  j["backend"] = report.backend;
  j["exact"] = report.exact;
  j["kappa_star"] = report.kappa_star;
  j["horizon"] = problem.horizon;
  j["grid_estimate"] =
      report.grid_estimate < 0 ? json(nullptr) : json(report.grid_estimate);
  json witness = json::array();
  for (const auto& u : report.witness) {
    witness.push_back(std::vector<double>(u.data(), u.data() + u.size()));
  }
  j["witness"] = witness;
  write_text(join_path(config.output_dir, "oracle.json"), j.dump(2) + "\n");
  return report;
}

bool CheckReport::passed() const {
  return std::all_of(items.begin(), items.end(),
                     [](const CheckItem& i) { return i.passed; });
}

double momentum_identity_error(const AttitudeScenario& scenario, int samples,
                               std::uint64_t seed) {
  const auto& p = scenario.params;
  const int w = p.wheels();
  const Matrix jbar = p.locked_inertia();
  const Matrix jw_w = p.wheel_inertia * p.wheel_axes;
  std::mt19937_64 rng{seed};
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (int n = 0; n < samples; ++n) {
    Vector x(6 + w);
    x[0] = 0.5 * unit(rng);
    x[1] = 0.5 * unit(rng);
    x[2] = 3.0 * unit(rng);
    for (int i = 3; i < 6; ++i) x[i] = 0.01 * unit(rng);
    for (int i = 6; i < 6 + w; ++i) x[i] = 60.0 + 40.0 * unit(rng);
    Vector u(w);
    for (int i = 0; i < w; ++i) u[i] = 2.0 * unit(rng);
    const Vector xdot = continuous_dynamics(x, u, p);
    const Vector hdot = jbar * xdot.segment(3, 3) + jw_w * xdot.tail(w);
    const Vector h = body_momentum(x, p);
    const Vector gyro = skew(x.segment(3, 3)) * h;
    const Vector rhs = srp_torque(x[0], x[1], x[2], p) - gyro;
    const double scale = std::max({hdot.lpNorm<Eigen::Infinity>(),
                                   rhs.lpNorm<Eigen::Infinity>(),
                                   gyro.lpNorm<Eigen::Infinity>(), 1e-300});
    worst = std::max(worst, (hdot - rhs).lpNorm<Eigen::Infinity>() / scale);
  }
  return worst;
}

std::vector<Vector> random_admissible_controls(const DcocProblem& problem,
                                               std::mt19937_64& rng) {
  const auto& set = problem.control_set;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> out(static_cast<std::size_t>(problem.horizon),
                          Vector::Zero(set.dim()));
  for (auto& u : out) {
    for (int i = 0; i < set.dim(); ++i) {
      const double lo = std::isfinite(set.lower[i]) ? set.lower[i] : -1.0;
      const double hi = std::isfinite(set.upper[i]) ? set.upper[i] : 1.0;
      u[i] = lo + (hi - lo) * unit(rng);
    }
    if (set.one_norm_cap) {
      double norm = 0.0;
      for (int c : set.one_norm_cap->components) norm += std::abs(u[c]);
      const double target = set.one_norm_cap->cap * unit(rng);
      if (norm > target && norm > 0.0) {
        for (int c : set.one_norm_cap->components) u[c] *= target / norm;
      }
    }
  }
  return out;
}

CheckReport run_checks(const ScenarioConfig& config, int samples) {
  CheckReport report;
  const DcocProblem problem = build_problem(config);
  const double big_m = resolved_big_m(config, problem);
  const NlpInstance nlp = build_nlp(problem, config.theta, big_m);
  std::mt19937_64 rng{config.seed};

  std::vector<std::vector<Vector>> sequences;
  for (int i = 0; i < samples; ++i) {
    sequences.push_back(random_admissible_controls(problem, rng));
  }

  double gradient = nlp_gradients_check(nlp, nlp.initial_guess);
  for (int i = 0; i < std::min(samples, 2); ++i) {
    gradient = std::max(gradient, nlp_gradients_check(
                                      nlp, pack_point(nlp, problem, sequences[static_cast<std::size_t>(i)])));
  }
  report.items.push_back({"gradient", gradient, 1e-5, gradient < 1e-5});

  if (is_attitude(config)) {
    const double err = momentum_identity_error(config.attitude, 1000, config.seed);
    report.items.push_back({"momentum-identity", err, 1e-12, err <= 1e-12});
  }

  double mismatches = 0.0;
  double witness = 0.0;
  for (const auto& controls : sequences) {
    const Vector z = pack_point(nlp, problem, controls);
    const auto ex = extract(nlp, z, problem);
    const Trajectory traj = simulate(problem, controls);
    if (ex.kappa != time_before_exit(traj, problem.constraints)) mismatches += 1.0;
    witness = std::max(witness, max_violation(nlp, z));
  }
  report.items.push_back({"kappa-consistency", mismatches, 0.0, mismatches == 0.0});
  report.items.push_back({"witness-feasibility", witness, 1e-9, witness <= 1e-9});
  return report;
}

}  // namespace dcoc
