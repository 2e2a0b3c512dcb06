#include "dcoc/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace dcoc {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal:
      return "optimal";
    case LpStatus::infeasible:
      return "infeasible";
    case LpStatus::unbounded:
      return "unbounded";
    case LpStatus::max_iter:
      return "max-iter";
  }
  return "unknown";
}

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Sense { le, ge, eq };

/// Canonical tableau. Row m holds the reduced costs; the last column is the
/// right-hand side (and minus the objective value in row m).
class Tableau {
 public:
  Tableau(RowMatrix t, std::vector<int> basis, int usable_cols, double tol)
      : t_{std::move(t)}, basis_{std::move(basis)}, usable_{usable_cols}, tol_{tol} {}

  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }
  double rhs(int i) const { return t_(i, cols()); }
  double objective() const { return -t_(rows(), cols()); }
  const std::vector<int>& basis() const { return basis_; }
  double at(int i, int j) const { return t_(i, j); }
  void restrict_columns(int usable) { usable_ = usable; }

  /// Installs cost vector c (length cols()) and prices out the basis.
  void set_costs(const Vector& c) {
    t_.row(rows()).setZero();
    t_.row(rows()).head(cols()) = c.transpose();
    for (int i = 0; i < rows(); ++i) {
      const double cb = c[basis_[i]];
      if (cb != 0.0) {
        t_.row(rows()) -= cb * t_.row(i);
      }
    }
  }

  void pivot(int r, int j) {
    t_.row(r) /= t_(r, j);
    for (int i = 0; i <= rows(); ++i) {
      if (i != r) {
        const double f = t_(i, j);
        if (f != 0.0) {
          t_.row(i) -= f * t_.row(r);
          t_(i, j) = 0.0;
        }
      }
    }
    basis_[r] = j;
  }

  /// Bland's rule iterations. Returns optimal, unbounded or max_iter.
  LpStatus run(int& iterations, int max_iter) {
    while (iterations < max_iter) {
      int enter = -1;
      for (int j = 0; j < usable_; ++j) {
        if (t_(rows(), j) < -tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) {
        return LpStatus::optimal;
      }
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a > tol_) {
          const double ratio = std::max(rhs(i), 0.0) / a;
          if (ratio < best - tol_ ||
              (leave >= 0 && std::abs(ratio - best) <= tol_ &&
               basis_[i] < basis_[leave])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) {
        return LpStatus::unbounded;
      }
      pivot(leave, enter);
      ++iterations;
    }
    return LpStatus::max_iter;
  }

 private:
  RowMatrix t_;
  std::vector<int> basis_;
  int usable_;
  double tol_;
};

}  // namespace

LpResult solve_lp(const LpProblem& lp, double tol) {
  const int n = static_cast<int>(lp.c.size());
  const int m_le = static_cast<int>(lp.A_le.rows());
  const int m_eq = static_cast<int>(lp.A_eq.rows());
  if (lp.lower.size() != n || lp.upper.size() != n ||
      (m_le > 0 && lp.A_le.cols() != n) || (m_eq > 0 && lp.A_eq.cols() != n) ||
      lp.b_le.size() != m_le || lp.b_eq.size() != m_eq) {
    throw Error{ErrorKind::layout, "LP dimensions disagree"};
  }
  LpResult result;
  for (int j = 0; j < n; ++j) {
    if (lp.lower[j] > lp.upper[j]) {
      result.status = LpStatus::infeasible;
      return result;
    }
  }

  // x = T y + shift with y ≥ 0.
  std::vector<std::pair<int, double>> map_plus(n);
  std::vector<int> map_minus(n, -1);
  Vector shift = Vector::Zero(n);
  std::vector<std::pair<int, double>> bound_rows;  // (y column, upper)
  int ny = 0;
  for (int j = 0; j < n; ++j) {
    const bool lo = std::isfinite(lp.lower[j]);
    const bool hi = std::isfinite(lp.upper[j]);
    if (lo) {
      shift[j] = lp.lower[j];
      map_plus[j] = {ny, 1.0};
      if (hi) {
        bound_rows.emplace_back(ny, lp.upper[j] - lp.lower[j]);
      }
      ++ny;
    } else if (hi) {
      shift[j] = lp.upper[j];
      map_plus[j] = {ny++, -1.0};
    } else {
      map_plus[j] = {ny++, 1.0};
      map_minus[j] = ny++;
    }
  }
  Matrix T = Matrix::Zero(n, ny);
  for (int j = 0; j < n; ++j) {
    T(j, map_plus[j].first) = map_plus[j].second;
    if (map_minus[j] >= 0) {
      T(j, map_minus[j]) = -1.0;
    }
  }

  const int m = m_le + m_eq + static_cast<int>(bound_rows.size());
  Matrix A = Matrix::Zero(m, ny);
  Vector b(m);
  std::vector<Sense> sense(m);
  if (m_le > 0) {
    A.topRows(m_le) = lp.A_le * T;
    b.head(m_le) = lp.b_le - lp.A_le * shift;
  }
  if (m_eq > 0) {
    A.middleRows(m_le, m_eq) = lp.A_eq * T;
    b.segment(m_le, m_eq) = lp.b_eq - lp.A_eq * shift;
  }
  for (int i = 0; i < m; ++i) {
    sense[i] = i < m_le ? Sense::le : (i < m_le + m_eq ? Sense::eq : Sense::le);
  }
  for (std::size_t r = 0; r < bound_rows.size(); ++r) {
    const int i = m_le + m_eq + static_cast<int>(r);
    A(i, bound_rows[r].first) = 1.0;
    b[i] = bound_rows[r].second;
  }
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      A.row(i) *= -1.0;
      b[i] = -b[i];
      if (sense[i] == Sense::le) {
        sense[i] = Sense::ge;
      } else if (sense[i] == Sense::ge) {
        sense[i] = Sense::le;
      }
    }
  }

  int n_slack = 0;
  int n_art = 0;
  for (int i = 0; i < m; ++i) {
    n_slack += sense[i] != Sense::eq ? 1 : 0;
    n_art += sense[i] != Sense::le ? 1 : 0;
  }
  const int cols = ny + n_slack + n_art;
  RowMatrix t = RowMatrix::Zero(m + 1, cols + 1);
  std::vector<int> basis(m);
  t.topLeftCorner(m, ny) = A;
  t.col(cols).head(m) = b;
  int next_slack = ny;
  int next_art = ny + n_slack;
  for (int i = 0; i < m; ++i) {
    if (sense[i] == Sense::le) {
      t(i, next_slack) = 1.0;
      basis[i] = next_slack++;
    } else {
      if (sense[i] == Sense::ge) {
        t(i, next_slack++) = -1.0;
      }
      t(i, next_art) = 1.0;
      basis[i] = next_art++;
    }
  }

  const double scale = 1.0 + (m > 0 ? b.lpNorm<Eigen::Infinity>() : 0.0);
  Tableau tab{std::move(t), std::move(basis), cols, tol};
  const int max_iter = 50 * (m + cols) + 1000;

  if (n_art > 0) {
    Vector c1 = Vector::Zero(cols);
    c1.tail(n_art).setOnes();
    tab.set_costs(c1);
    const auto status = tab.run(result.iterations, max_iter);
    if (status == LpStatus::max_iter) {
      result.status = status;
      return result;
    }
    if (tab.objective() > tol * scale) {
      result.status = LpStatus::infeasible;
      return result;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (tab.basis()[i] >= ny + n_slack) {
        for (int j = 0; j < ny + n_slack; ++j) {
          if (std::abs(tab.at(i, j)) > tol) {
            tab.pivot(i, j);
            break;
          }
        }
      }
    }
  }

  Vector c2 = Vector::Zero(cols);
  c2.head(ny) = T.transpose() * lp.c;
  tab.restrict_columns(ny + n_slack);
  tab.set_costs(c2);
  result.status = tab.run(result.iterations, max_iter);
  if (result.status != LpStatus::optimal) {
    return result;
  }

  Vector y = Vector::Zero(cols);
  for (int i = 0; i < m; ++i) {
    y[tab.basis()[i]] = std::max(tab.rhs(i), 0.0);
  }
  result.x = T * y.head(ny) + shift;
  result.objective = lp.c.dot(result.x);
  return result;
}

}  // namespace dcoc
