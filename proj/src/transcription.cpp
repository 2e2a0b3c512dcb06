#include "dcoc/transcription.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace dcoc {

namespace {

struct Layout {
  int horizon = 0;
  int control_dim = 0;
  std::vector<int> capped;  // components under the 1-norm cap
  double cap = 0.0;

  int controls() const { return 0; }
  int slacks() const { return horizon * control_dim; }
  int aux() const { return slacks() + horizon + 1; }
  int n_vars() const {
    return aux() + horizon * static_cast<int>(capped.size());
  }
  int u(int k, int i) const { return controls() + k * control_dim + i; }
  int eps(int k) const { return slacks() + k; }
  int s(int k, int j) const {
    return aux() + k * static_cast<int>(capped.size()) + j;
  }
};

std::vector<Vector> unpack_controls(const Layout& layout, const Vector& z) {
  std::vector<Vector> controls(layout.horizon);
  for (int k = 0; k < layout.horizon; ++k) {
    controls[k] = z.segment(layout.u(k, 0), layout.control_dim);
  }
  return controls;
}

/// Linear rows of the transcription, stored as A z + b ≥ 0.
struct LinearRows {
  Matrix A;
  Vector b;
};

LinearRows linear_rows(const Layout& layout, const ControlSet& set) {
  std::vector<std::pair<std::vector<std::pair<int, double>>, double>> rows;
  for (int k = 0; k < layout.horizon; ++k) {
    for (int i = 0; i < layout.control_dim; ++i) {
      if (std::isfinite(set.lower[i])) {
        rows.push_back({{{layout.u(k, i), 1.0}}, -set.lower[i]});
      }
      if (std::isfinite(set.upper[i])) {
        rows.push_back({{{layout.u(k, i), -1.0}}, set.upper[i]});
      }
    }
  }
  if (!layout.capped.empty()) {
    for (int k = 0; k < layout.horizon; ++k) {
      std::vector<std::pair<int, double>> sum_row;
      for (std::size_t j = 0; j < layout.capped.size(); ++j) {
        const int ui = layout.u(k, layout.capped[j]);
        const int si = layout.s(k, static_cast<int>(j));
        rows.push_back({{{si, 1.0}, {ui, -1.0}}, 0.0});
        rows.push_back({{{si, 1.0}, {ui, 1.0}}, 0.0});
        sum_row.emplace_back(si, -1.0);
      }
      rows.push_back({sum_row, layout.cap});
    }
  }
  rows.push_back({{{layout.eps(0), 1.0}}, 0.0});
  for (int k = 0; k < layout.horizon; ++k) {
    rows.push_back({{{layout.eps(k + 1), 1.0}, {layout.eps(k), -1.0}}, 0.0});
  }

  LinearRows out;
  out.A = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), layout.n_vars());
  out.b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [col, val] : rows[r].first) {
      out.A(r, col) = val;
    }
    out.b[r] = rows[r].second;
  }
  return out;
}

/// Stage rows h_k + M ε_k − H_k(x_k) and optionally their Jacobian.
void stage_rows(const DcocProblem& problem, const Layout& layout, double big_m,
                const Vector& z, Vector& values, Matrix* jac) {
  const int n = layout.horizon;
  const int nx = problem.state_dim();
  const int nu = layout.control_dim;
  const auto controls = unpack_controls(layout, z);

  int total_rows = 0;
  for (const auto& c : problem.constraints) {
    total_rows += c.rows();
  }
  values.resize(total_rows);
  if (jac != nullptr) {
    jac->setZero(total_rows, layout.n_vars());
  }

  Vector x = problem.x0;
  // Sensitivity ∂x_k/∂[u_0..u_{k−1}]; only the first k·nu columns are live.
  Matrix sens = Matrix::Zero(nx, n * nu);
  Matrix dfdx;
  Matrix dfdu;
  int row = 0;
  for (int k = 0; k <= n; ++k) {
    const auto& c = problem.constraints[k];
    const int rows = c.rows();
    values.segment(row, rows) =
        c.bound - c.evaluate(x) + Vector::Constant(rows, big_m * z[layout.eps(k)]);
    if (jac != nullptr) {
      const int live = k * nu;
      if (live > 0) {
        jac->block(row, 0, rows, live).noalias() =
            -c.jacobian(x) * sens.leftCols(live);
      }
      jac->col(layout.eps(k)).segment(row, rows).setConstant(big_m);
    }
    row += rows;
    if (k == n) {
      break;
    }
    if (jac != nullptr) {
      problem.dynamics.jacobians(x, controls[k], dfdx, dfdu);
      const int live = k * nu;
      if (live > 0) {
        sens.leftCols(live) = (dfdx * sens.leftCols(live)).eval();
      }
      sens.block(0, live, nx, nu) = dfdu;
    }
    x = problem.dynamics.step(x, controls[k]);
    if (!x.allFinite()) {
      throw Error{ErrorKind::evaluation,
                  "non-finite state at step " + std::to_string(k + 1), k + 1};
    }
  }
}

Vector default_controls_point(const ControlSet& set) {
  Vector u = Vector::Zero(set.dim());
  for (int i = 0; i < set.dim(); ++i) {
    u[i] = std::clamp(0.0, set.lower[i], set.upper[i]);
  }
  return u;
}

double component_scale(const ControlSet& set, int i) {
  double scale = 0.0;
  if (std::isfinite(set.lower[i]) && std::isfinite(set.upper[i])) {
    scale = std::max(std::abs(set.lower[i]), std::abs(set.upper[i]));
  }
  if (set.one_norm_cap &&
      std::find(set.one_norm_cap->components.begin(),
                set.one_norm_cap->components.end(),
                i) != set.one_norm_cap->components.end()) {
    scale = scale > 0.0 ? std::min(scale, set.one_norm_cap->cap)
                        : set.one_norm_cap->cap;
  }
  return scale > 0.0 ? scale : 1.0;
}

}  // namespace

double default_big_m(const DcocProblem& problem) {
  double largest = 0.0;
  for (const auto& c : problem.constraints) {
    largest = std::max(largest, c.bound.lpNorm<Eigen::Infinity>());
  }
  return 10.0 * largest + 10.0;
}

Vector slack_witness(const DcocProblem& problem,
                     const std::vector<Vector>& controls, double big_m) {
  const auto traj = simulate(problem, controls);
  Vector eps(problem.horizon + 1);
  double running = 0.0;
  for (int k = 0; k <= problem.horizon; ++k) {
    running = std::max(running, -traj.stage_margins[k].minCoeff() / big_m);
    eps[k] = running;
  }
  return eps;
}

NlpInstance build_nlp(const DcocProblem& problem, double theta, double big_m,
                      TranscriptionMode mode) {
  if (!(theta > 1.0) || !std::isfinite(theta)) {
    throw Error{ErrorKind::parameter, "theta must satisfy theta > 1"};
  }
  if (!(big_m > 0.0) || !std::isfinite(big_m)) {
    throw Error{ErrorKind::parameter, "big-M must be positive"};
  }
  if (mode != TranscriptionMode::single_shooting) {
    throw Error{ErrorKind::parameter, "unsupported transcription mode"};
  }
  problem.validate();

  auto shared = std::make_shared<const DcocProblem>(problem);
  Layout layout;
  layout.horizon = problem.horizon;
  layout.control_dim = problem.control_dim();
  if (problem.control_set.one_norm_cap) {
    layout.capped = problem.control_set.one_norm_cap->components;
    layout.cap = problem.control_set.one_norm_cap->cap;
  }
  const int n = layout.horizon;

  auto lin = std::make_shared<const LinearRows>(
      linear_rows(layout, problem.control_set));
  int stage_total = 0;
  for (const auto& c : problem.constraints) {
    stage_total += c.rows();
  }

  NlpInstance nlp;
  nlp.n_vars = layout.n_vars();
  nlp.n_eq = 0;
  nlp.n_ineq = static_cast<int>(lin->A.rows()) + stage_total;
  nlp.theta = theta;
  nlp.big_m = big_m;
  nlp.layout = {{"controls", layout.controls(), n * layout.control_dim},
                {"slacks", layout.slacks(), n + 1}};
  if (!layout.capped.empty()) {
    nlp.layout.push_back(
        {"aux", layout.aux(), n * static_cast<int>(layout.capped.size())});
  }

  nlp.weights.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    nlp.weights[k] = std::pow(theta, -k);
  }
  Vector grad = Vector::Zero(nlp.n_vars);
  grad.segment(layout.slacks(), n + 1) = nlp.weights;

  nlp.cost = [grad](const Vector& z) { return grad.dot(z); };
  nlp.cost_gradient = [grad](const Vector&) { return grad; };
  nlp.ineq = [shared, layout, lin, big_m](const Vector& z) {
    Vector stage;
    stage_rows(*shared, layout, big_m, z, stage, nullptr);
    Vector out(lin->A.rows() + stage.size());
    out.head(lin->A.rows()) = lin->A * z + lin->b;
    out.tail(stage.size()) = stage;
    return out;
  };
  nlp.ineq_jacobian = [shared, layout, lin, big_m](const Vector& z) {
    Vector stage;
    Matrix stage_jac;
    stage_rows(*shared, layout, big_m, z, stage, &stage_jac);
    Matrix out(lin->A.rows() + stage.size(), z.size());
    out.topRows(lin->A.rows()) = lin->A;
    out.bottomRows(stage.size()) = stage_jac;
    return out;
  };

  const Vector u_default = default_controls_point(problem.control_set);
  nlp.initial_guess =
      pack_point(nlp, problem, std::vector<Vector>(n, u_default));

  nlp.sample_start = [shared, layout, u_default, nlp_layout = nlp.layout,
                      big_m](std::mt19937_64& rng) {
    const auto& set = shared->control_set;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Vector> controls(layout.horizon, u_default);
    for (auto& u : controls) {
      for (int i = 0; i < set.dim(); ++i) {
        u[i] = std::clamp(u[i] + 0.25 * component_scale(set, i) * unit(rng),
                          set.lower[i], set.upper[i]);
      }
      if (set.one_norm_cap) {
        double norm = 0.0;
        for (int c : set.one_norm_cap->components) {
          norm += std::abs(u[c]);
        }
        if (norm > set.one_norm_cap->cap) {
          const double shrink = set.one_norm_cap->cap / norm;
          for (int c : set.one_norm_cap->components) {
            u[c] *= shrink;
          }
        }
      }
    }
    NlpInstance view;
    view.layout = nlp_layout;
    view.n_vars = layout.n_vars();
    view.big_m = big_m;
    return pack_point(view, *shared, controls);
  };

  // Scaling: controls by their admissible magnitude, slacks by the smallest
  // nonzero constraint bound measured in units of M, objective so that the
  // heaviest slack has unit scaled gradient.
  nlp.scaling.variable = Vector::Ones(nlp.n_vars);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < layout.control_dim; ++i) {
      nlp.scaling.variable[layout.u(k, i)] =
          component_scale(problem.control_set, i);
    }
    for (std::size_t j = 0; j < layout.capped.size(); ++j) {
      nlp.scaling.variable[layout.s(k, static_cast<int>(j))] =
          component_scale(problem.control_set, layout.capped[j]);
    }
  }
  double smallest_bound = std::numeric_limits<double>::infinity();
  for (const auto& c : problem.constraints) {
    for (int r = 0; r < c.rows(); ++r) {
      if (std::abs(c.bound[r]) > 0.0) {
        smallest_bound = std::min(smallest_bound, std::abs(c.bound[r]));
      }
    }
  }
  if (!std::isfinite(smallest_bound)) {
    smallest_bound = 1.0;
  }
  const double slack_scale = smallest_bound / big_m;
  nlp.scaling.variable.segment(layout.slacks(), n + 1).setConstant(slack_scale);
  nlp.scaling.objective = 1.0 / slack_scale;
  scale_rows_at(nlp, nlp.initial_guess);
  return nlp;
}

Vector pack_point(const NlpInstance& nlp, const DcocProblem& problem,
                  const std::vector<Vector>& controls) {
  const int n = problem.horizon;
  const int nu = problem.control_dim();
  if (static_cast<int>(controls.size()) != n) {
    throw Error{ErrorKind::layout, "control sequence has wrong length"};
  }
  Vector z = Vector::Zero(nlp.n_vars);
  for (int k = 0; k < n; ++k) {
    z.segment(k * nu, nu) = controls[k];
  }
  z.segment(n * nu, n + 1) = slack_witness(problem, controls, nlp.big_m);
  if (const auto* aux = nlp.range("aux")) {
    const auto& comps = problem.control_set.one_norm_cap->components;
    const int per_step = static_cast<int>(comps.size());
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < per_step; ++j) {
        z[aux->offset + k * per_step + j] = std::abs(controls[k][comps[j]]);
      }
    }
  }
  return z;
}

double exponential_cost(const NlpInstance& nlp, const Vector& z) {
  const auto* slacks = nlp.range("slacks");
  if (slacks == nullptr) {
    throw Error{ErrorKind::layout, "instance has no slack range"};
  }
  const int n = slacks->size - 1;
  double total = 0.0;
  for (int k = 0; k <= n; ++k) {
    total += std::pow(nlp.theta, n - k) * z[slacks->offset + k];
  }
  return total;
}

SolutionExtract extract(const NlpInstance& nlp, const Vector& primal,
                        const DcocProblem& problem, double tol_feas) {
  if (primal.size() != nlp.n_vars) {
    throw Error{ErrorKind::layout, "primal has length " +
                                       std::to_string(primal.size()) +
                                       ", expected " +
                                       std::to_string(nlp.n_vars)};
  }
  const auto* slacks = nlp.range("slacks");
  const auto* controls = nlp.range("controls");
  if (slacks == nullptr || controls == nullptr) {
    throw Error{ErrorKind::layout, "instance is not a DCOC transcription"};
  }
  SolutionExtract out;
  const int nu = problem.control_dim();
  for (int k = 0; k < problem.horizon; ++k) {
    out.controls.push_back(primal.segment(controls->offset + k * nu, nu));
  }
  out.slacks = primal.segment(slacks->offset, slacks->size);
  out.trajectory = simulate(problem, out.controls);
  out.kappa = time_before_exit(out.trajectory, problem.constraints, tol_feas);
  out.objective = nlp.cost(primal);
  return out;
}

}  // namespace dcoc
