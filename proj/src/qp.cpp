#include "dcoc/qp.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

namespace dcoc {

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal:
      return "optimal";
    case QpStatus::infeasible:
      return "infeasible";
    case QpStatus::not_convex:
      return "not-convex";
    case QpStatus::max_iter:
      return "max-iter";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Factorization state of the dual method: J = L⁻ᵀ Q and the upper
/// triangular R with Qᵀ L⁻¹ N_active = [R; 0].
class ActiveSet {
 public:
  ActiveSet(Matrix J, int n) : J_{std::move(J)}, R_{Matrix::Zero(n, n)}, n_{n} {}

  int size() const { return iq_; }

  /// d = Jᵀ normal.
  Vector project(const Vector& normal) const { return J_.transpose() * normal; }

  /// Primal direction z = J₂ d₂.
  Vector primal_direction(const Vector& d) const {
    return J_.rightCols(n_ - iq_) * d.tail(n_ - iq_);
  }

  /// Dual direction r = R⁻¹ d₁.
  Vector dual_direction(const Vector& d) const {
    return R_.topLeftCorner(iq_, iq_)
        .triangularView<Eigen::Upper>()
        .solve(d.head(iq_));
  }

  /// Appends a constraint whose projected normal is d (modified in place).
  /// Returns false when the normal is linearly dependent on the active ones.
  bool add(Vector& d) {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d[j - 1];
      double ss = d[j];
      const double h = std::hypot(cc, ss);
      if (h == 0.0) {
        continue;
      }
      d[j] = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d[j - 1] = -h;
      } else {
        d[j - 1] = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    ++iq_;
    R_.col(iq_ - 1).head(iq_) = d.head(iq_);
    if (std::abs(d[iq_ - 1]) <= kEps * r_norm_) {
      return false;
    }
    r_norm_ = std::max(r_norm_, std::abs(d[iq_ - 1]));
    return true;
  }

  /// Removes the active constraint stored at position `pos`; `tags` and `mult`
  /// are kept aligned (position iq_ holds the entering constraint).
  void remove(int pos, std::vector<int>& tags, Vector& mult) {
    for (int i = pos; i < iq_ - 1; ++i) {
      tags[i] = tags[i + 1];
      mult[i] = mult[i + 1];
      R_.col(i) = R_.col(i + 1);
    }
    tags[iq_ - 1] = tags[iq_];
    mult[iq_ - 1] = mult[iq_];
    tags[iq_] = -1;
    mult[iq_] = 0.0;
    R_.col(iq_ - 1).setZero();
    --iq_;
    if (iq_ == 0) {
      return;
    }
    for (int j = pos; j < iq_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) {
        continue;
      }
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

 private:
  Matrix J_;
  Matrix R_;
  int n_;
  int iq_ = 0;
  double r_norm_ = 1.0;
};

}  // namespace

QpResult solve_qp(const QpProblem& qp, const QpOptions& options) {
  const int n = static_cast<int>(qp.g.size());
  const int meq = static_cast<int>(qp.A_eq.rows());
  const int mineq = static_cast<int>(qp.A_in.rows());
  if (qp.G.rows() != n || qp.G.cols() != n || (meq > 0 && qp.A_eq.cols() != n) ||
      (mineq > 0 && qp.A_in.cols() != n) || qp.b_eq.size() != meq ||
      qp.b_in.size() != mineq) {
    throw Error{ErrorKind::layout, "QP dimensions disagree"};
  }

  QpResult result;
  result.lambda_eq = Vector::Zero(meq);
  result.lambda_in = Vector::Zero(mineq);

  Eigen::LLT<Matrix> llt(qp.G);
  if (llt.info() != Eigen::Success) {
    result.status = QpStatus::not_convex;
    return result;
  }
  // J = L⁻ᵀ.
  Matrix J = llt.matrixU().solve(Matrix::Identity(n, n));
  ActiveSet active{std::move(J), n};

  const int max_iter =
      options.max_iter > 0 ? options.max_iter : 10 * (n + meq + mineq) + 100;

  Vector x = -llt.solve(qp.g);
  // Active constraint tags: equality i → −(i + 1), inequality i → i.
  std::vector<int> tags(n + 1, -1);
  Vector mult = Vector::Zero(n + 1);

  const Eigen::SparseMatrix<double, Eigen::RowMajor> A_in_sparse =
      qp.A_in.sparseView();

  auto finish = [&](QpStatus status) {
    result.status = status;
    result.x = x;
    for (int i = 0; i < active.size(); ++i) {
      if (tags[i] < 0) {
        result.lambda_eq[-tags[i] - 1] = mult[i];
      } else {
        result.lambda_in[tags[i]] = mult[i];
        result.active.push_back(tags[i]);
      }
    }
    result.objective = 0.5 * x.dot(qp.G * x) + qp.g.dot(x);
    return result;
  };

  for (int i = 0; i < meq; ++i) {
    const Vector normal = qp.A_eq.row(i).transpose();
    Vector d = active.project(normal);
    const Vector z = active.primal_direction(d);
    const Vector r = active.dual_direction(d);
    const double zn = z.dot(normal);
    const double t2 = std::abs(zn) > kEps ? -(normal.dot(x) + qp.b_eq[i]) / zn : 0.0;
    x += t2 * z;
    const int iq = active.size();
    mult.head(iq) -= t2 * r;
    mult[iq] = t2;
    tags[iq] = -(i + 1);
    if (!active.add(d)) {
      return finish(QpStatus::infeasible);
    }
  }

  std::vector<bool> is_active(mineq, false);
  Vector slack(mineq);
  int iter = 0;
  while (true) {
    if (++iter > max_iter) {
      result.iterations = iter;
      return finish(QpStatus::max_iter);
    }
    // Step 1: pick the most violated inactive row.
    slack.noalias() = A_in_sparse * x;
    slack += qp.b_in;
    int p = -1;
    double worst = 0.0;
    for (int i = 0; i < mineq; ++i) {
      if (is_active[i]) {
        continue;
      }
      const double tol = options.violation_tol * (1.0 + std::abs(qp.b_in[i]));
      if (slack[i] < -tol && slack[i] < worst) {
        worst = slack[i];
        p = i;
      }
    }
    if (p < 0) {
      result.iterations = iter;
      return finish(QpStatus::optimal);
    }
    const Vector normal = qp.A_in.row(p).transpose();
    double sp = slack[p];
    {
      const int iq = active.size();
      tags[iq] = p;
      mult[iq] = 0.0;
    }

    // Step 2: move along the primal/dual directions until p is satisfied.
    while (true) {
      const int iq = active.size();
      Vector d = active.project(normal);
      const Vector z = active.primal_direction(d);
      const Vector r = active.dual_direction(d);

      double t1 = kInf;
      int drop = -1;
      for (int k = 0; k < iq; ++k) {
        if (tags[k] >= 0 && r[k] > 0.0) {
          const double ratio = mult[k] / r[k];
          if (ratio < t1) {
            t1 = ratio;
            drop = k;
          }
        }
      }
      const double zn = z.dot(normal);
      const double t2 =
          z.lpNorm<Eigen::Infinity>() > kEps && zn > 0.0 ? -sp / zn : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) {
        result.iterations = iter;
        return finish(QpStatus::infeasible);
      }
      if (t2 == kInf) {
        mult.head(iq) -= t * r;
        mult[iq] += t;
        is_active[tags[drop]] = false;
        active.remove(drop, tags, mult);
        continue;
      }
      x += t * z;
      mult.head(iq) -= t * r;
      mult[iq] += t;
      if (t == t2) {
        if (!active.add(d)) {
          result.iterations = iter;
          return finish(QpStatus::infeasible);
        }
        is_active[p] = true;
        break;
      }
      is_active[tags[drop]] = false;
      active.remove(drop, tags, mult);
      sp = normal.dot(x) + qp.b_in[p];
      if (++iter > max_iter) {
        result.iterations = iter;
        return finish(QpStatus::max_iter);
      }
    }
  }
}

}  // namespace dcoc
