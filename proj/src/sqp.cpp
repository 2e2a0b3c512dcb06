#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "dcoc/qp.hpp"
#include "dcoc/solver.hpp"

namespace dcoc {

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::optimal:
      return "optimal";
    case SolverStatus::max_iter:
      return "max-iter";
    case SolverStatus::infeasible_subproblem:
      return "infeasible-subproblem";
    case SolverStatus::line_search_failure:
      return "line-search-failure";
  }
  return "unknown";
}

void SolverOptions::validate() const {
  const bool ok = kkt_tol > 0.0 && kkt_tol < 1.0 && feas_tol > 0.0 &&
                  max_iter > 0 && penalty_growth > 1.0 && bfgs_damping > 0.0 &&
                  bfgs_damping < 1.0 && bfgs_min_curvature > 0.0 &&
                  backtrack_ratio > 0.0 && backtrack_ratio < 1.0 &&
                  armijo > 0.0 && armijo < 0.5 && max_backtracks > 0;
  if (!ok) {
    throw Error{ErrorKind::parameter, "invalid solver options"};
  }
}

namespace {

/// View of an instance in scaled coordinates ẑ = z / D.
class ScaledNlp {
 public:
  explicit ScaledNlp(const NlpInstance& nlp) : nlp_{nlp} {
    const int n = nlp.n_vars;
    var_ = nlp.scaling.variable.size() == n ? nlp.scaling.variable
                                             : Vector::Ones(n);
    obj_ = nlp.scaling.objective;
    eq_ = nlp.scaling.eq_rows.size() == nlp.n_eq ? nlp.scaling.eq_rows
                                                  : Vector::Ones(nlp.n_eq);
    in_ = nlp.scaling.ineq_rows.size() == nlp.n_ineq ? nlp.scaling.ineq_rows
                                                      : Vector::Ones(nlp.n_ineq);
  }

  const NlpInstance& raw() const { return nlp_; }
  int n() const { return nlp_.n_vars; }
  int n_eq() const { return nlp_.n_eq; }
  int n_in() const { return nlp_.n_ineq; }

  Vector to_raw(const Vector& zs) const { return zs.cwiseProduct(var_); }
  Vector to_scaled(const Vector& z) const { return z.cwiseQuotient(var_); }

  double f(const Vector& z) const { return obj_ * nlp_.cost(z); }
  Vector grad(const Vector& z) const {
    return obj_ * nlp_.cost_gradient(z).cwiseProduct(var_);
  }
  Vector c_eq(const Vector& z) const {
    return nlp_.eval_eq(z).cwiseProduct(eq_);
  }
  Vector c_in(const Vector& z) const {
    return nlp_.eval_ineq(z).cwiseProduct(in_);
  }
  Matrix jac_eq(const Vector& z) const {
    return eq_.asDiagonal() * nlp_.eval_eq_jacobian(z) * var_.asDiagonal();
  }
  Matrix jac_in(const Vector& z) const {
    return in_.asDiagonal() * nlp_.eval_ineq_jacobian(z) * var_.asDiagonal();
  }

  /// Scaled multipliers → unscaled, and back.
  Vector unscale_multipliers(const Vector& lam_eq, const Vector& lam_in) const {
    Vector out(n_eq() + n_in());
    out.head(n_eq()) = lam_eq.cwiseProduct(eq_) / obj_;
    out.tail(n_in()) = lam_in.cwiseProduct(in_) / obj_;
    return out;
  }
  void scale_multipliers(const Vector& lam, Vector& lam_eq, Vector& lam_in) const {
    lam_eq = lam.head(n_eq()).cwiseQuotient(eq_) * obj_;
    lam_in = lam.tail(n_in()).cwiseQuotient(in_) * obj_;
  }

 private:
  const NlpInstance& nlp_;
  Vector var_;
  double obj_ = 1.0;
  Vector eq_;
  Vector in_;
};

/// Everything evaluated at one (scaled) point.
struct Point {
  Vector z;  ///< raw coordinates
  double f = 0.0;
  Vector c_eq;
  Vector c_in;
  Vector grad;
  Matrix jac_eq;
  Matrix jac_in;
};

bool finite(const Point& p) {
  return std::isfinite(p.f) && p.c_eq.allFinite() && p.c_in.allFinite();
}

double violation_l1(const Vector& c_eq, const Vector& c_in) {
  return c_eq.lpNorm<1>() + (-c_in).cwiseMax(0.0).sum();
}

double violation_inf(const Vector& c_eq, const Vector& c_in) {
  double v = c_eq.size() > 0 ? c_eq.lpNorm<Eigen::Infinity>() : 0.0;
  if (c_in.size() > 0) {
    v = std::max(v, (-c_in).cwiseMax(0.0).maxCoeff());
  }
  return v;
}

void evaluate_values(const ScaledNlp& nlp, Point& p) {
  p.f = nlp.f(p.z);
  p.c_eq = nlp.c_eq(p.z);
  p.c_in = nlp.c_in(p.z);
}

void evaluate_derivatives(const ScaledNlp& nlp, Point& p) {
  p.grad = nlp.grad(p.z);
  p.jac_eq = nlp.jac_eq(p.z);
  p.jac_in = nlp.jac_in(p.z);
  if (!p.grad.allFinite() || !p.jac_eq.allFinite() || !p.jac_in.allFinite()) {
    throw Error{ErrorKind::evaluation, "non-finite derivative"};
  }
}

/// Scaled KKT residual at p for scaled multipliers.
double scaled_kkt(const Point& p, const Vector& lam_eq, const Vector& lam_in) {
  Vector stat = p.grad;
  if (lam_eq.size() > 0) {
    stat.noalias() -= p.jac_eq.transpose() * lam_eq;
  }
  if (lam_in.size() > 0) {
    stat.noalias() -= p.jac_in.transpose() * lam_in;
  }
  double res = stat.size() > 0 ? stat.lpNorm<Eigen::Infinity>() : 0.0;
  res = std::max(res, violation_inf(p.c_eq, p.c_in));
  if (lam_in.size() > 0) {
    res = std::max(res, (-lam_in).cwiseMax(0.0).maxCoeff());
    res = std::max(res, lam_in.cwiseProduct(p.c_in).lpNorm<Eigen::Infinity>());
  }
  return res;
}

Vector lagrangian_gradient(const Point& p, const Vector& lam_eq,
                           const Vector& lam_in) {
  Vector g = p.grad;
  if (lam_eq.size() > 0) {
    g.noalias() -= p.jac_eq.transpose() * lam_eq;
  }
  if (lam_in.size() > 0) {
    g.noalias() -= p.jac_in.transpose() * lam_in;
  }
  return g;
}

void damped_bfgs(Matrix& B, const Vector& s, const Vector& y,
                 const SolverOptions& opts) {
  const Vector Bs = B * s;
  const double sBs = s.dot(Bs);
  const double ss = s.squaredNorm();
  if (!(sBs > 0.0) || !(ss > 0.0)) {
    return;
  }
  const double target = std::max(opts.bfgs_damping * sBs, opts.bfgs_min_curvature * ss);
  const double sy = s.dot(y);
  Vector r = y;
  if (sy < target) {
    const double theta = (sBs - target) / (sBs - sy);
    r = theta * y + (1.0 - theta) * Bs;
  }
  const double sr = s.dot(r);
  if (!(sr > 0.0) || !r.allFinite()) {
    return;
  }
  B.noalias() -= (Bs * Bs.transpose()) / sBs;
  B.noalias() += (r * r.transpose()) / sr;
  B = 0.5 * (B + B.transpose()).eval();
}

QpProblem make_qp(const Matrix& B, const Point& p) {
  QpProblem qp;
  qp.G = B;
  qp.g = p.grad;
  qp.A_eq = p.jac_eq;
  qp.b_eq = p.c_eq;
  qp.A_in = p.jac_in;
  qp.b_in = p.c_in;
  return qp;
}

}  // namespace

double max_violation(const NlpInstance& nlp, const Vector& primal) {
  return violation_inf(nlp.eval_eq(primal), nlp.eval_ineq(primal));
}

double kkt_residual(const NlpInstance& nlp, const Vector& primal,
                    const Vector& multipliers) {
  if (primal.size() != nlp.n_vars ||
      multipliers.size() != nlp.n_eq + nlp.n_ineq) {
    throw Error{ErrorKind::layout, "kkt_residual: dimension mismatch"};
  }
  ScaledNlp scaled{nlp};
  Point p;
  p.z = primal;
  evaluate_values(scaled, p);
  evaluate_derivatives(scaled, p);
  Vector lam_eq;
  Vector lam_in;
  scaled.scale_multipliers(multipliers, lam_eq, lam_in);
  return scaled_kkt(p, lam_eq, lam_in);
}

SolverSolution solve(const NlpInstance& nlp, const Vector& init,
                     const SolverOptions& opts) {
  opts.validate();
  if (init.size() != nlp.n_vars || !init.allFinite()) {
    throw Error{ErrorKind::invalid_argument,
                "initial point must be finite with length n_vars"};
  }
  const ScaledNlp scaled{nlp};
  const int n = nlp.n_vars;

  SolverSolution sol;
  Point cur;
  cur.z = init;
  evaluate_values(scaled, cur);
  if (!finite(cur)) {
    throw Error{ErrorKind::evaluation, "non-finite cost or constraint at start"};
  }
  evaluate_derivatives(scaled, cur);

  Matrix B = Matrix::Identity(n, n);
  Vector lam_eq = Vector::Zero(nlp.n_eq);
  Vector lam_in = Vector::Zero(nlp.n_ineq);
  double penalty = 0.0;

  auto finish = [&](SolverStatus status, int iterations) {
    sol.status = status;
    sol.iterations = iterations;
    sol.primal = cur.z;
    sol.multipliers = scaled.unscale_multipliers(lam_eq, lam_in);
    sol.kkt_residual = scaled_kkt(cur, lam_eq, lam_in);
    sol.objective = nlp.cost(cur.z);
    sol.max_violation = max_violation(nlp, cur.z);
    return sol;
  };

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    QpResult qp = solve_qp(make_qp(B, cur));
    if (qp.status == QpStatus::not_convex) {
      B = Matrix::Identity(n, n);
      qp = solve_qp(make_qp(B, cur));
    }
    if (qp.status != QpStatus::optimal) {
      return finish(SolverStatus::infeasible_subproblem, iter);
    }
    // QP step in scaled coordinates.
    const Vector& d = qp.x;
    lam_eq = qp.lambda_eq;
    lam_in = qp.lambda_in;

    if (scaled_kkt(cur, lam_eq, lam_in) <= opts.kkt_tol &&
        max_violation(nlp, cur.z) <= opts.feas_tol) {
      return finish(SolverStatus::optimal, iter);
    }

    double lam_norm = 0.0;
    if (lam_eq.size() > 0) {
      lam_norm = lam_eq.lpNorm<Eigen::Infinity>();
    }
    if (lam_in.size() > 0) {
      lam_norm = std::max(lam_norm, lam_in.lpNorm<Eigen::Infinity>());
    }
    if (penalty < 1.1 * lam_norm) {
      penalty = std::max(opts.penalty_growth * lam_norm, 1.5 * penalty);
    }

    const double viol0 = violation_l1(cur.c_eq, cur.c_in);
    const double merit0 = cur.f + penalty * viol0;
    double slope = cur.grad.dot(d) - penalty * viol0;
    slope = std::min(slope, -0.5 * d.dot(B * d));

    const Vector dz = d.cwiseProduct(scaled.to_raw(Vector::Ones(n)));
    auto try_point = [&](const Vector& z) -> std::optional<Point> {
      Point trial;
      trial.z = z;
      try {
        evaluate_values(scaled, trial);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::evaluation &&
            e.kind() != ErrorKind::simulation_diverged &&
            e.kind() != ErrorKind::gimbal_singularity) {
          throw;
        }
        return std::nullopt;
      }
      if (!finite(trial)) {
        return std::nullopt;
      }
      return trial;
    };
    auto merit = [&](const Point& p) {
      return p.f + penalty * violation_l1(p.c_eq, p.c_in);
    };

    std::optional<Point> accepted;
    double alpha = 1.0;
    {
      auto full = try_point(cur.z + dz);
      if (full && merit(*full) <= merit0 + opts.armijo * slope) {
        accepted = std::move(full);
      } else if (full) {
        // Second-order correction: re-linearize constraints at the trial.
        QpProblem soc = make_qp(B, cur);
        soc.b_eq = full->c_eq - cur.jac_eq * d;
        soc.b_in = full->c_in - cur.jac_in * d;
        const QpResult corr = solve_qp(soc);
        if (corr.status == QpStatus::optimal) {
          auto corrected =
              try_point(cur.z + corr.x.cwiseProduct(scaled.to_raw(Vector::Ones(n))));
          if (corrected && merit(*corrected) <= merit0 + opts.armijo * slope) {
            accepted = std::move(corrected);
          }
        }
      }
    }
    for (int bt = 0; !accepted && bt < opts.max_backtracks; ++bt) {
      alpha *= opts.backtrack_ratio;
      auto trial = try_point(cur.z + alpha * dz);
      if (trial && merit(*trial) <= merit0 + opts.armijo * alpha * slope) {
        accepted = std::move(trial);
      }
    }
    if (!accepted) {
      return finish(SolverStatus::line_search_failure, iter);
    }

    sol.merit_log.push_back({penalty, merit0, merit(*accepted), alpha});
    evaluate_derivatives(scaled, *accepted);
    const Vector s = scaled.to_scaled(accepted->z - cur.z);
    const Vector y = lagrangian_gradient(*accepted, lam_eq, lam_in) -
                     lagrangian_gradient(cur, lam_eq, lam_in);
    damped_bfgs(B, s, y, opts);
    cur = std::move(*accepted);
  }
  return finish(SolverStatus::max_iter, opts.max_iter);
}

SolverSolution multi_start(const NlpInstance& nlp, int n_starts,
                           std::uint64_t seed, const SolverOptions& opts) {
  if (n_starts < 1) {
    throw Error{ErrorKind::parameter, "n_starts must be at least 1"};
  }
  Vector base = nlp.initial_guess.size() == nlp.n_vars
                    ? nlp.initial_guess
                    : Vector::Zero(nlp.n_vars);
  std::mt19937_64 rng{seed};
  std::normal_distribution<double> noise{0.0, 1.0};

  std::optional<SolverSolution> best;
  auto better = [](const SolverSolution& a, const SolverSolution& b) {
    const bool a_ok = a.status == SolverStatus::optimal;
    const bool b_ok = b.status == SolverStatus::optimal;
    if (a_ok != b_ok) {
      return a_ok;
    }
    if (a_ok) {
      return a.objective < b.objective;
    }
    if (a.max_violation != b.max_violation) {
      return a.max_violation < b.max_violation;
    }
    return a.objective < b.objective;
  };
  auto recoverable = [](const Error& e) {
    return e.kind() == ErrorKind::evaluation ||
           e.kind() == ErrorKind::simulation_diverged ||
           e.kind() == ErrorKind::gimbal_singularity;
  };
  std::optional<Error> last_error;
  for (int run = 0; run < n_starts; ++run) {
    // A start whose trajectory cannot be evaluated is skipped.
    try {
      Vector start = base;
      if (run > 0) {
        if (nlp.sample_start) {
          start = nlp.sample_start(rng);
        } else {
          for (int i = 0; i < start.size(); ++i) {
            start[i] += 0.1 * (1.0 + std::abs(start[i])) * noise(rng);
          }
        }
      }
      SolverSolution sol = solve(nlp, start, opts);
      if (!best || better(sol, *best)) {
        best = std::move(sol);
      }
    } catch (const Error& e) {
      if (!recoverable(e)) {
        throw;
      }
      last_error = e;
    }
  }
  if (!best) {
    throw *last_error;
  }
  return *best;
}

}  // namespace dcoc
