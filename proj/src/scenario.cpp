#include "dcoc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dcoc/linear_systems.hpp"

namespace dcoc {

using json = nlohmann::json;

const char* to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::attitude_3rw:
      return "attitude-3rw";
    case SystemKind::attitude_2rw:
      return "attitude-2rw";
    case SystemKind::double_integrator:
      return "double-integrator";
    case SystemKind::custom_linear:
      return "custom-linear";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& what) {
  throw Error{ErrorKind::config, what};
}

/// Object view that remembers which keys were read so leftovers can be
/// reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_{j}, where_{std::move(where)} {
    if (!j_.is_object()) {
      fail(where_ + " must be an object");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) {
      fail(where_ + ": missing key \"" + key + "\"");
    }
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  double number(const std::string& key) { return as_number(at(key), path(key)); }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }
  int integer(const std::string& key, int fallback) {
    if (!has(key)) {
      return fallback;
    }
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) {
      fail(path(key) + " must be an integer");
    }
    return v.get<int>();
  }
  std::string text(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_string()) {
      fail(path(key) + " must be a string");
    }
    return v.get<std::string>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) {
      return fallback;
    }
    const auto& v = j_.at(key);
    if (!v.is_boolean()) {
      fail(path(key) + " must be true or false");
    }
    return v.get<bool>();
  }
  Vector vector(const std::string& key, bool allow_null = false) {
    return as_vector(at(key), path(key), allow_null);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (seen_.count(key) == 0) {
        fail(where_ + ": unknown key \"" + key + "\"");
      }
    }
  }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) {
      fail(where + " must be a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      fail(where + " must be finite");
    }
    return d;
  }

  /// null entries become ±inf when allowed (sign chosen by the caller).
  static Vector as_vector(const json& v, const std::string& where,
                          bool allow_null) {
    if (!v.is_array()) {
      fail(where + " must be an array");
    }
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (allow_null && v[i].is_null()) {
        out[static_cast<Eigen::Index>(i)] = kInf;
      } else {
        out[static_cast<Eigen::Index>(i)] =
            as_number(v[i], where + "[" + std::to_string(i) + "]");
      }
    }
    return out;
  }

  static Matrix as_matrix(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) {
      fail(where + " must be a non-empty array of rows");
    }
    Matrix out;
    for (std::size_t r = 0; r < v.size(); ++r) {
      const Vector row = as_vector(v[r], where + "[" + std::to_string(r) + "]", false);
      if (r == 0) {
        out.resize(static_cast<Eigen::Index>(v.size()), row.size());
      } else if (row.size() != out.cols()) {
        fail(where + " has ragged rows");
      }
      out.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return out;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json vector_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) {
      out.push_back(v[i]);
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    out.push_back(vector_json(m.row(r).transpose()));
  }
  return out;
}

SystemKind parse_kind(const std::string& s) {
  for (auto kind : {SystemKind::attitude_3rw, SystemKind::attitude_2rw,
                    SystemKind::double_integrator, SystemKind::custom_linear}) {
    if (s == to_string(kind)) {
      return kind;
    }
  }
  fail("unknown system kind \"" + s + "\"");
}

bool is_attitude(SystemKind kind) {
  return kind == SystemKind::attitude_3rw || kind == SystemKind::attitude_2rw;
}

void read_solver(Reader r, SolverOptions& o) {
  o.kkt_tol = r.number("kkt_tol", o.kkt_tol);
  o.feas_tol = r.number("feas_tol", o.feas_tol);
  o.max_iter = r.integer("max_iter", o.max_iter);
  o.penalty_growth = r.number("penalty_growth", o.penalty_growth);
  o.bfgs_damping = r.number("bfgs_damping", o.bfgs_damping);
  o.bfgs_min_curvature = r.number("bfgs_min_curvature", o.bfgs_min_curvature);
  o.backtrack_ratio = r.number("backtrack_ratio", o.backtrack_ratio);
  o.armijo = r.number("armijo", o.armijo);
  o.max_backtracks = r.integer("max_backtracks", o.max_backtracks);
  r.finish();
}

void read_attitude(Reader r, AttitudeScenario& s, int wheels) {
  auto& p = s.params;
  if (r.has("inertia")) p.inertia = r.vector("inertia");
  p.wheel_inertia = r.number("wheel_inertia", p.wheel_inertia);
  {
    const json& axes = r.at("wheel_axes");
    const Matrix rows = Reader::as_matrix(axes, r.path("wheel_axes"));
    if (rows.cols() != 3 || rows.rows() != wheels) {
      fail(r.path("wheel_axes") + " must list " + std::to_string(wheels) +
           " axes of length 3");
    }
    p.wheel_axes = rows.transpose();
  }
  if (r.has("dimensions")) p.dimensions = r.vector("dimensions");
  if (r.has("com_offset")) p.com_offset = r.vector("com_offset");
  p.solar_flux = r.number("solar_flux", p.solar_flux);
  p.diffusion = r.number("diffusion", p.diffusion);
  if (r.has("sun_direction")) p.sun_direction = r.vector("sun_direction");
  p.speed_of_light = r.number("speed_of_light", p.speed_of_light);

  const Matrix bounds = Reader::as_matrix(r.at("angle_bounds"), r.path("angle_bounds"));
  if (bounds.rows() != 3 || bounds.cols() != 2) {
    fail(r.path("angle_bounds") + " must be three [lower, upper] pairs");
  }
  s.angle_bounds.clear();
  for (int i = 0; i < 3; ++i) {
    if (!(bounds(i, 0) <= bounds(i, 1))) {
      fail(r.path("angle_bounds") + " has an inverted pair");
    }
    s.angle_bounds.emplace_back(bounds(i, 0), bounds(i, 1));
  }
  const Vector wheel = r.vector("wheel_speed_bounds");
  if (wheel.size() != 2 || !(wheel[0] <= wheel[1])) {
    fail(r.path("wheel_speed_bounds") + " must be [lower, upper]");
  }
  s.wheel_min = wheel[0];
  s.wheel_max = wheel[1];
  s.wheel_bounds_one_norm = r.boolean("wheel_bounds_one_norm", false);
  s.control_cap = r.number("control_one_norm_cap");
  if (!(s.control_cap > 0.0)) {
    fail(r.path("control_one_norm_cap") + " must be positive");
  }
  r.finish();
  try {
    p.validate();
  } catch (const Error& e) {
    fail(std::string{"attitude: "} + e.what());
  }
}

Vector bound_vector(Reader& r, const std::string& key, double sign) {
  Vector v = r.vector(key, true);
  for (int i = 0; i < v.size(); ++i) {
    if (std::isinf(v[i])) v[i] = sign * kInf;
  }
  return v;
}

void read_linear(Reader r, LinearConfig& l) {
  l.A = Reader::as_matrix(r.at("A"), r.path("A"));
  l.B = Reader::as_matrix(r.at("B"), r.path("B"));
  const int nx = static_cast<int>(l.A.rows());
  l.c = r.has("c") ? r.vector("c") : Vector::Zero(nx);
  l.state_lower = bound_vector(r, "state_lower", -1.0);
  l.state_upper = bound_vector(r, "state_upper", 1.0);
  l.control_lower = bound_vector(r, "control_lower", -1.0);
  l.control_upper = bound_vector(r, "control_upper", 1.0);
  if (r.has("control_one_norm_cap")) {
    l.control_one_norm_cap = r.number("control_one_norm_cap");
  }
  l.state_names.clear();
  if (r.has("state_names")) {
    const auto& names = r.at("state_names");
    if (!names.is_array()) fail(r.path("state_names") + " must be an array");
    for (const auto& n : names) {
      if (!n.is_string()) fail(r.path("state_names") + " must hold strings");
      l.state_names.push_back(n.get<std::string>());
    }
  }
  r.finish();
  const int nu = static_cast<int>(l.B.cols());
  if (l.A.cols() != nx || l.B.rows() != nx || l.c.size() != nx ||
      l.state_lower.size() != nx || l.state_upper.size() != nx ||
      l.control_lower.size() != nu || l.control_upper.size() != nu ||
      (!l.state_names.empty() && static_cast<int>(l.state_names.size()) != nx)) {
    fail("linear: matrix and bound dimensions disagree");
  }
}

void read_grid(Reader r, GridConfig& g) {
  const json& axes = r.at("axes");
  const Matrix a = Reader::as_matrix(axes, r.path("axes"));
  if (a.cols() != 3) fail(r.path("axes") + " entries must be [lower, upper, points]");
  g.axes.clear();
  for (int i = 0; i < a.rows(); ++i) {
    if (!(a(i, 0) < a(i, 1)) || a(i, 2) < 2 || a(i, 2) != std::floor(a(i, 2))) {
      fail(r.path("axes") + " entries need lower < upper and an integer count >= 2");
    }
    g.axes.push_back({a(i, 0), a(i, 1), a(i, 2)});
  }
  const Matrix u = Reader::as_matrix(r.at("controls"), r.path("controls"));
  g.controls.clear();
  for (int i = 0; i < u.rows(); ++i) {
    g.controls.push_back(u.row(i).transpose());
  }
  r.finish();
}

void validate(const ScenarioConfig& c) {
  if (c.name.empty()) fail("name must not be empty");
  if (!(c.theta > 1.0)) fail("theta must satisfy theta > 1");
  if (c.big_m && !(*c.big_m > 0.0)) fail("big_m must be positive");
  if (c.horizon < 1) fail("horizon must be at least 1");
  if (!(c.dt > 0.0)) fail("dt must be positive");
  if (c.starts < 1) fail("starts must be at least 1");
  if (!c.x0.allFinite()) fail("x0 must be finite");
  try {
    c.solver.validate();
  } catch (const Error& e) {
    fail(std::string{"solver: "} + e.what());
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string{"malformed JSON: "} + e.what());
  }
  ScenarioConfig c;
  Reader r{j, "config"};
  const json& version = r.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kConfigSchemaVersion) {
    fail("unsupported schema_version (expected " +
         std::to_string(kConfigSchemaVersion) + ")");
  }
  c.name = r.text("name");
  c.system = parse_kind(r.text("system"));
  c.horizon = r.integer("horizon", c.horizon);
  c.dt = r.number("dt", c.dt);
  c.theta = r.number("theta", c.theta);
  c.theta_continuation = r.boolean("theta_continuation", c.theta_continuation);
  if (r.has("big_m") && !r.at("big_m").is_null()) c.big_m = r.number("big_m");
  if (r.has("seed")) {
    const auto& s = r.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      fail("config.seed must be a nonnegative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  c.starts = r.integer("starts", c.starts);
  c.output_dir = r.has("output_dir") ? r.text("output_dir") : "out/" + c.name;
  c.x0 = r.vector("x0");
  if (r.has("solver")) read_solver(Reader{r.at("solver"), "solver"}, c.solver);

  const bool att = is_attitude(c.system);
  for (const char* block : {"attitude", "linear", "double_integrator"}) {
    const bool wanted = (std::string{block} == "attitude" && att) ||
                        (std::string{block} == "linear" &&
                         c.system == SystemKind::custom_linear) ||
                        (std::string{block} == "double_integrator" &&
                         c.system == SystemKind::double_integrator);
    if (r.has(block) && !wanted) {
      fail(std::string{"config: block \""} + block + "\" does not match system " +
           to_string(c.system));
    }
  }
  if (att) {
    read_attitude(Reader{r.at("attitude"), "attitude"}, c.attitude,
                  c.system == SystemKind::attitude_3rw ? 3 : 2);
  } else if (c.system == SystemKind::custom_linear) {
    read_linear(Reader{r.at("linear"), "linear"}, c.linear);
  } else {
    Reader d{r.at("double_integrator"), "double_integrator"};
    c.double_integrator.position_bound = d.number("position_bound");
    c.double_integrator.control_bound = d.number("control_bound");
    d.finish();
    if (!(c.double_integrator.position_bound > 0.0) ||
        !(c.double_integrator.control_bound > 0.0)) {
      fail("double_integrator bounds must be positive");
    }
  }
  if (r.has("grid")) {
    GridConfig g;
    read_grid(Reader{r.at("grid"), "grid"}, g);
    c.grid = std::move(g);
  }
  if (r.has("corrupt_jacobian")) c.corrupt_jacobian = r.number("corrupt_jacobian");
  r.finish();
  c.attitude.name = c.name;
  c.attitude.horizon = c.horizon;
  c.attitude.dt = c.dt;
  c.attitude.x0 = c.x0;
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail("cannot read config file " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string dump_config(const ScenarioConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["name"] = c.name;
  j["system"] = to_string(c.system);
  j["horizon"] = c.horizon;
  j["dt"] = c.dt;
  j["theta"] = c.theta;
  j["theta_continuation"] = c.theta_continuation;
  j["big_m"] = c.big_m ? json(*c.big_m) : json(nullptr);
  j["seed"] = c.seed;
  j["starts"] = c.starts;
  j["output_dir"] = c.output_dir;
  j["x0"] = vector_json(c.x0);
  const auto& o = c.solver;
  j["solver"] = {{"kkt_tol", o.kkt_tol},
                 {"feas_tol", o.feas_tol},
                 {"max_iter", o.max_iter},
                 {"penalty_growth", o.penalty_growth},
                 {"bfgs_damping", o.bfgs_damping},
                 {"bfgs_min_curvature", o.bfgs_min_curvature},
                 {"backtrack_ratio", o.backtrack_ratio},
                 {"armijo", o.armijo},
                 {"max_backtracks", o.max_backtracks}};
  if (is_attitude(c.system)) {
    const auto& s = c.attitude;
    const auto& p = s.params;
    json bounds = json::array();
    for (const auto& [lo, hi] : s.angle_bounds) bounds.push_back({lo, hi});
    j["attitude"] = {{"inertia", vector_json(p.inertia)},
                     {"wheel_inertia", p.wheel_inertia},
                     {"wheel_axes", matrix_json(p.wheel_axes.transpose())},
                     {"dimensions", vector_json(p.dimensions)},
                     {"com_offset", vector_json(p.com_offset)},
                     {"solar_flux", p.solar_flux},
                     {"diffusion", p.diffusion},
                     {"sun_direction", vector_json(p.sun_direction)},
                     {"speed_of_light", p.speed_of_light},
                     {"angle_bounds", bounds},
                     {"wheel_speed_bounds", {s.wheel_min, s.wheel_max}},
                     {"wheel_bounds_one_norm", s.wheel_bounds_one_norm},
                     {"control_one_norm_cap", s.control_cap}};
  } else if (c.system == SystemKind::custom_linear) {
    const auto& l = c.linear;
    j["linear"] = {{"A", matrix_json(l.A)},
                   {"B", matrix_json(l.B)},
                   {"c", vector_json(l.c)},
                   {"state_lower", vector_json(l.state_lower)},
                   {"state_upper", vector_json(l.state_upper)},
                   {"control_lower", vector_json(l.control_lower)},
                   {"control_upper", vector_json(l.control_upper)}};
    if (l.control_one_norm_cap) {
      j["linear"]["control_one_norm_cap"] = *l.control_one_norm_cap;
    }
    if (!l.state_names.empty()) j["linear"]["state_names"] = l.state_names;
  } else {
    j["double_integrator"] = {
        {"position_bound", c.double_integrator.position_bound},
        {"control_bound", c.double_integrator.control_bound}};
  }
  if (c.grid) {
    json axes = json::array();
    for (const auto& a : c.grid->axes) {
      axes.push_back({a[0], a[1], static_cast<int>(a[2])});
    }
    json controls = json::array();
    for (const auto& u : c.grid->controls) controls.push_back(vector_json(u));
    j["grid"] = {{"axes", axes}, {"controls", controls}};
  }
  if (c.corrupt_jacobian) j["corrupt_jacobian"] = *c.corrupt_jacobian;
  return j.dump(2) + "\n";
}

void save_config(const ScenarioConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error{ErrorKind::resource, "cannot write " + path};
  }
  out << dump_config(config);
}

std::string config_hash(const ScenarioConfig& config) {
  return fnv1a_hex(dump_config(config));
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DcocProblem build_problem(const ScenarioConfig& c) {
  DcocProblem problem;
  if (is_attitude(c.system)) {
    problem = make_attitude_problem(c.attitude);
  } else if (c.system == SystemKind::double_integrator) {
    if (c.x0.size() != 2) fail("double integrator needs a 2-component x0");
    problem = make_double_integrator(c.dt, c.horizon, c.x0,
                                     c.double_integrator.position_bound,
                                     c.double_integrator.control_bound);
  } else {
    const auto& l = c.linear;
    if (c.x0.size() != l.A.rows()) fail("x0 does not match the linear system");
    ControlSet set = ControlSet::box(l.control_lower, l.control_upper);
    if (l.control_one_norm_cap) {
      OneNormCap cap;
      cap.cap = *l.control_one_norm_cap;
      for (int i = 0; i < l.B.cols(); ++i) cap.components.push_back(i);
      set.one_norm_cap = cap;
    }
    problem = make_linear_problem(LinearModel{l.A, l.B, l.c}, c.x0, c.horizon,
                                  l.state_lower, l.state_upper, std::move(set),
                                  l.state_names);
  }
  if (c.corrupt_jacobian) {
    const double scale = *c.corrupt_jacobian;
    const Dynamics original = problem.dynamics;
    problem.dynamics.jacobian = [original, scale](const Vector& x, const Vector& u,
                                                  Matrix& dfdx, Matrix& dfdu) {
      original.jacobians(x, u, dfdx, dfdu);
      dfdx *= scale;
      dfdu *= scale;
    };
    problem.dynamics.linear.reset();
  }
  problem.validate();
  return problem;
}

std::string bundled_scenario_path(const std::string& name) {
  return std::string{DCOC_SCENARIO_DIR} + "/" + name + ".json";
}

std::vector<std::string> bundled_scenario_names() {
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(DCOC_SCENARIO_DIR)) {
    if (entry.path().extension() == ".json") {
      names.push_back(entry.path().stem().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace dcoc
