#include "dcoc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "dcoc/transcription.hpp"

namespace dcoc {

const char* to_string(OracleMethod method) {
  switch (method) {
    case OracleMethod::sweep:
      return "sweep";
    case OracleMethod::grid_dp:
      return "grid-dp";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector resting_control(const ControlSet& set) {
  Vector u = Vector::Zero(set.dim());
  for (int i = 0; i < set.dim(); ++i) {
    u[i] = std::clamp(0.0, set.lower[i], set.upper[i]);
  }
  return u;
}

/// Accumulates LP rows A x ≤ b over a fixed number of columns.
struct RowBuilder {
  int cols = 0;
  std::vector<std::pair<std::vector<std::pair<int, double>>, double>> sparse;
  std::vector<std::pair<Vector, double>> dense;  // (row restricted to u, rhs)

  Matrix assemble(Vector& b) const {
    const auto m = static_cast<Eigen::Index>(sparse.size() + dense.size());
    Matrix A = Matrix::Zero(m, cols);
    b.resize(m);
    Eigen::Index r = 0;
    for (const auto& [row, rhs] : dense) {
      A.row(r).head(row.size()) = row.transpose();
      b[r++] = rhs;
    }
    for (const auto& [row, rhs] : sparse) {
      for (const auto& [c, v] : row) {
        A(r, c) += v;
      }
      b[r++] = rhs;
    }
    return A;
  }
};

/// Box bounds on u and the split encoding of the 1-norm cap over s columns
/// starting at s_offset.
void add_control_set(const ControlSet& set, int horizon, int s_offset,
                     RowBuilder& rows, Vector& lower, Vector& upper) {
  const int nu = set.dim();
  for (int k = 0; k < horizon; ++k) {
    lower.segment(k * nu, nu) = set.lower;
    upper.segment(k * nu, nu) = set.upper;
  }
  if (!set.one_norm_cap) {
    return;
  }
  const auto& comps = set.one_norm_cap->components;
  const int per_step = static_cast<int>(comps.size());
  for (int k = 0; k < horizon; ++k) {
    std::vector<std::pair<int, double>> sum_row;
    for (int j = 0; j < per_step; ++j) {
      const int u = k * nu + comps[j];
      const int s = s_offset + k * per_step + j;
      rows.sparse.push_back({{{u, 1.0}, {s, -1.0}}, 0.0});
      rows.sparse.push_back({{{u, -1.0}, {s, -1.0}}, 0.0});
      sum_row.emplace_back(s, 1.0);
      lower[s] = 0.0;
      upper[s] = kInf;
    }
    rows.sparse.push_back({sum_row, set.one_norm_cap->cap});
  }
}

int aux_count(const DcocProblem& problem) {
  const auto& cap = problem.control_set.one_norm_cap;
  return cap ? problem.horizon * static_cast<int>(cap->components.size()) : 0;
}

/// Stage rows G_k P_k u (− M ε_k) ≤ h_k − offset_k − G_k q_k.
void add_stage_rows(const DcocProblem& problem,
                    const std::vector<AffineMap>& maps, int k,
                    RowBuilder& rows, int eps_col, double big_m) {
  const auto& c = problem.constraints[k];
  const Matrix GP = c.affine->G * maps[k].G;
  const Vector rhs = c.bound - c.affine->offset - c.affine->G * maps[k].offset;
  for (int r = 0; r < c.rows(); ++r) {
    if (eps_col < 0) {
      rows.dense.emplace_back(GP.row(r).transpose(), rhs[r]);
    } else {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < GP.cols(); ++j) {
        if (GP(r, j) != 0.0) {
          row.emplace_back(j, GP(r, j));
        }
      }
      row.emplace_back(eps_col, -big_m);
      rows.sparse.push_back({std::move(row), rhs[r]});
    }
  }
}

std::vector<Vector> split_controls(const Vector& x, int horizon, int nu) {
  std::vector<Vector> controls(horizon);
  for (int k = 0; k < horizon; ++k) {
    controls[k] = x.segment(k * nu, nu);
  }
  return controls;
}

bool stays_inside(const DcocProblem& problem,
                  const std::vector<Vector>& controls, int m, double tol) {
  try {
    const auto traj = simulate(problem, controls);
    return time_before_exit(traj, problem.constraints, tol) >= m;
  } catch (const Error&) {
    return false;
  }
}

std::optional<std::vector<Vector>> lp_feasible(
    const DcocProblem& problem, const std::vector<AffineMap>& maps, int m,
    double tol_feas) {
  const int n = problem.horizon;
  const int nu = problem.control_dim();
  const int cols = n * nu + aux_count(problem);
  RowBuilder rows;
  rows.cols = cols;
  LpProblem lp;
  lp.c = Vector::Zero(cols);
  lp.lower = Vector::Constant(cols, -kInf);
  lp.upper = Vector::Constant(cols, kInf);
  add_control_set(problem.control_set, n, n * nu, rows, lp.lower, lp.upper);
  for (int k = 1; k <= m; ++k) {
    add_stage_rows(problem, maps, k, rows, -1, 0.0);
  }
  lp.A_le = rows.assemble(lp.b_le);
  lp.A_eq = Matrix(0, cols);
  lp.b_eq = Vector(0);
  const auto result = solve_lp(lp);
  if (result.status != LpStatus::optimal) {
    return std::nullopt;
  }
  auto controls = split_controls(result.x, n, nu);
  // Clip round-off so the witness lies in U exactly.
  for (auto& u : controls) {
    u = u.cwiseMax(problem.control_set.lower).cwiseMin(problem.control_set.upper);
  }
  if (!stays_inside(problem, controls, m, tol_feas)) {
    return std::nullopt;
  }
  return controls;
}

/// Hard feasibility through step m as an NLP: the transcription of the
/// horizon-m truncation with every slack pinned to zero and no cost.
NlpInstance hard_feasibility_nlp(const DcocProblem& truncated) {
  NlpInstance nlp = build_nlp(truncated, 1.1, default_big_m(truncated));
  const auto* slacks = nlp.range("slacks");
  const int offset = slacks->offset;
  const int count = slacks->size;
  const int n_vars = nlp.n_vars;
  nlp.cost = [](const Vector&) { return 0.0; };
  nlp.cost_gradient = [n_vars](const Vector&) { return Vector{Vector::Zero(n_vars)}; };
  nlp.n_eq = count;
  nlp.eq = [offset, count](const Vector& z) { return Vector{z.segment(offset, count)}; };
  nlp.eq_jacobian = [offset, count, n_vars](const Vector&) {
    Matrix j = Matrix::Zero(count, n_vars);
    j.block(0, offset, count, count).setIdentity();
    return j;
  };
  nlp.scaling.objective = 1.0;
  scale_rows_at(nlp, nlp.initial_guess);
  return nlp;
}

std::optional<std::vector<Vector>> sqp_feasible(
    const DcocProblem& problem, int m, const OracleOptions& opts,
    const std::vector<Vector>& warm) {
  DcocProblem truncated = problem;
  truncated.horizon = m;
  truncated.constraints.resize(m + 1);
  const NlpInstance nlp = hard_feasibility_nlp(truncated);
  const int nu = problem.control_dim();
  const auto* controls_range = nlp.range("controls");

  std::vector<Vector> starts;
  if (!warm.empty()) {
    starts.push_back(pack_point(
        nlp, truncated,
        std::vector<Vector>(warm.begin(), warm.begin() + m)));
  }
  starts.push_back(nlp.initial_guess);
  std::mt19937_64 rng{opts.seed + static_cast<std::uint64_t>(m)};
  while (static_cast<int>(starts.size()) < std::max(opts.starts, 1) + (warm.empty() ? 0 : 1)) {
    starts.push_back(nlp.sample_start(rng));
  }

  const Vector rest = resting_control(problem.control_set);
  for (const auto& start : starts) {
    SolverSolution sol;
    try {
      sol = solve(nlp, start, opts.solver);
    } catch (const Error&) {
      continue;
    }
    std::vector<Vector> controls(problem.horizon, rest);
    for (int k = 0; k < m; ++k) {
      controls[k] = sol.primal.segment(controls_range->offset + k * nu, nu);
    }
    if (stays_inside(problem, controls, m, opts.tol_feas) &&
        std::all_of(controls.begin(), controls.end(), [&](const Vector& u) {
          return problem.control_set.contains(u, 1e-9);
        })) {
      return controls;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<AffineMap> affine_rollout(const DcocProblem& problem) {
  if (!problem.dynamics.linear) {
    throw Error{ErrorKind::invalid_argument, "dynamics are not linear"};
  }
  const auto& model = *problem.dynamics.linear;
  const int n = problem.horizon;
  const int nx = problem.state_dim();
  const int nu = problem.control_dim();
  std::vector<AffineMap> maps(n + 1);
  maps[0].G = Matrix::Zero(nx, n * nu);
  maps[0].offset = problem.x0;
  for (int k = 0; k < n; ++k) {
    maps[k + 1].G = model.A * maps[k].G;
    maps[k + 1].G.block(0, k * nu, nx, nu) += model.B;
    maps[k + 1].offset = model.A * maps[k].offset + model.c;
  }
  return maps;
}

LpProblem transcription_lp(const DcocProblem& problem, double theta,
                           double big_m) {
  if (!problem.is_linear()) {
    throw Error{ErrorKind::invalid_argument, "instance is not linear/affine"};
  }
  problem.validate();
  const int n = problem.horizon;
  const int nu = problem.control_dim();
  const int eps = n * nu;
  const int cols = eps + n + 1 + aux_count(problem);
  const auto maps = affine_rollout(problem);

  RowBuilder rows;
  rows.cols = cols;
  LpProblem lp;
  lp.c = Vector::Zero(cols);
  lp.lower = Vector::Constant(cols, -kInf);
  lp.upper = Vector::Constant(cols, kInf);
  add_control_set(problem.control_set, n, eps + n + 1, rows, lp.lower, lp.upper);
  for (int k = 0; k <= n; ++k) {
    lp.c[eps + k] = std::pow(theta, -k);
    lp.lower[eps + k] = 0.0;
    if (k < n) {
      rows.sparse.push_back({{{eps + k, 1.0}, {eps + k + 1, -1.0}}, 0.0});
    }
    add_stage_rows(problem, maps, k, rows, eps + k, big_m);
  }
  lp.A_le = rows.assemble(lp.b_le);
  lp.A_eq = Matrix(0, cols);
  lp.b_eq = Vector(0);
  return lp;
}

OracleReport kappa_star_sweep(const DcocProblem& problem,
                              const OracleOptions& opts) {
  problem.validate(opts.tol_feas);
  const int n = problem.horizon;
  OracleReport report;
  report.method = OracleMethod::sweep;
  report.exact = problem.is_linear();
  report.backend = report.exact ? "lp" : "sqp";

  std::vector<AffineMap> maps;
  if (report.exact) {
    maps = affine_rollout(problem);
  }
  std::vector<Vector> best_witness;
  auto check = [&](int m) {
    report.evaluated.push_back(m);
    auto found = report.exact ? lp_feasible(problem, maps, m, opts.tol_feas)
                              : sqp_feasible(problem, m, opts, best_witness);
    if (found) {
      best_witness = std::move(*found);
      return true;
    }
    return false;
  };

  int lo = 0;      // known feasible
  int hi = n + 1;  // known infeasible
  if (check(n)) {
    lo = n;
  } else {
    hi = n;
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      if (check(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  report.kappa_star = lo;
  report.verdicts.resize(n);
  for (int m = 1; m <= n; ++m) {
    report.verdicts[m - 1] = m <= lo;
  }
  report.witness = best_witness.empty()
                       ? std::vector<Vector>(
                             n, resting_control(problem.control_set))
                       : best_witness;
  return report;
}

OracleReport kappa_star_grid_dp(const DcocProblem& problem,
                                const StateGrid& state_grid,
                                const std::vector<Vector>& control_grid,
                                const OracleOptions& opts) {
  problem.validate(opts.tol_feas);
  const int nx = problem.state_dim();
  const int n = problem.horizon;
  if (nx > 3) {
    throw Error{ErrorKind::invalid_argument, "grid DP needs at most 3 states"};
  }
  if (static_cast<int>(state_grid.axes.size()) != nx) {
    throw Error{ErrorKind::layout, "state grid needs one axis per state"};
  }
  if (control_grid.empty()) {
    throw Error{ErrorKind::invalid_argument, "control grid is empty"};
  }
  std::size_t points = 1;
  for (const auto& axis : state_grid.axes) {
    if (axis.empty() || !std::is_sorted(axis.begin(), axis.end()) ||
        !std::all_of(axis.begin(), axis.end(),
                     [](double v) { return std::isfinite(v); })) {
      throw Error{ErrorKind::invalid_argument,
                  "grid axes must be finite, sorted and non-empty"};
    }
    points *= axis.size();
  }
  if (points * static_cast<std::size_t>(n + 1) > opts.grid_cap) {
    throw Error{ErrorKind::resource,
                "grid has " + std::to_string(points) + " points over " +
                    std::to_string(n + 1) + " stages, above the cap of " +
                    std::to_string(opts.grid_cap)};
  }
  for (std::size_t j = 0; j < control_grid.size(); ++j) {
    if (!problem.control_set.contains(control_grid[j])) {
      throw Error{ErrorKind::invalid_argument,
                  "control grid entry " + std::to_string(j) + " is not in U",
                  static_cast<int>(j)};
    }
  }

  auto nearest = [&](const Vector& x) {
    std::size_t index = 0;
    std::size_t stride = 1;
    for (int d = 0; d < nx; ++d) {
      const auto& axis = state_grid.axes[d];
      const auto it = std::lower_bound(axis.begin(), axis.end(), x[d]);
      std::size_t i = static_cast<std::size_t>(it - axis.begin());
      if (i == axis.size()) {
        i = axis.size() - 1;
      } else if (i > 0 && x[d] - axis[i - 1] <= axis[i] - x[d]) {
        --i;
      }
      index += i * stride;
      stride *= axis.size();
    }
    return index;
  };
  auto point = [&](std::size_t index) {
    Vector x(nx);
    for (int d = 0; d < nx; ++d) {
      const auto& axis = state_grid.axes[d];
      x[d] = axis[index % axis.size()];
      index /= axis.size();
    }
    return x;
  };

  const std::size_t n_u = control_grid.size();
  std::vector<Vector> next(points * n_u);
  std::vector<std::size_t> next_index(points * n_u);
  std::vector<bool> finite(points * n_u);
  for (std::size_t g = 0; g < points; ++g) {
    const Vector x = point(g);
    for (std::size_t j = 0; j < n_u; ++j) {
      Vector y = problem.dynamics.step(x, control_grid[j]);
      const std::size_t slot = g * n_u + j;
      finite[slot] = y.allFinite();
      next_index[slot] = finite[slot] ? nearest(y) : 0;
      next[slot] = std::move(y);
    }
  }

  // value[k][g]: max further steps inside from grid point g at stage k.
  std::vector<std::vector<int>> value(n + 1, std::vector<int>(points, 0));
  for (int k = n - 1; k >= 0; --k) {
    const auto& c = problem.constraints[k + 1];
    for (std::size_t g = 0; g < points; ++g) {
      int best = 0;
      for (std::size_t j = 0; j < n_u; ++j) {
        const std::size_t slot = g * n_u + j;
        if (finite[slot] && check_membership(next[slot], c, opts.tol_feas).inside) {
          best = std::max(best, 1 + value[k + 1][next_index[slot]]);
        }
      }
      value[k][g] = best;
    }
  }

  OracleReport report;
  report.method = OracleMethod::grid_dp;
  report.backend = "dp";
  report.exact = false;
  report.grid_estimate = value[0][nearest(problem.x0)];

  Vector x = problem.x0;
  bool inside = true;
  for (int k = 0; k < n; ++k) {
    int best = -1;
    std::size_t choice = 0;
    Vector best_next;
    for (std::size_t j = 0; j < n_u; ++j) {
      Vector y = problem.dynamics.step(x, control_grid[j]);
      int score = 0;
      if (y.allFinite() &&
          check_membership(y, problem.constraints[k + 1], opts.tol_feas).inside) {
        score = 1 + value[k + 1][nearest(y)];
      }
      if (score > best) {
        best = score;
        choice = j;
        best_next = std::move(y);
      }
    }
    report.witness.push_back(control_grid[choice]);
    inside = inside && best > 0;
    if (inside) {
      report.kappa_star = k + 1;
    }
    if (!best_next.allFinite()) {
      report.witness.resize(n, control_grid[0]);
      break;
    }
    x = std::move(best_next);
  }
  report.verdicts.resize(n);
  for (int m = 1; m <= n; ++m) {
    report.verdicts[m - 1] = m <= report.kappa_star;
  }
  return report;
}

}  // namespace dcoc
