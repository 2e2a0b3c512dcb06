#include "dcoc/nlp.hpp"

#include <algorithm>
#include <cmath>

namespace dcoc {

const VariableRange* NlpInstance::range(const std::string& name) const {
  for (const auto& r : layout) {
    if (r.name == name) {
      return &r;
    }
  }
  return nullptr;
}

Vector NlpInstance::eval_eq(const Vector& z) const {
  return n_eq > 0 ? eq(z) : Vector{};
}

Vector NlpInstance::eval_ineq(const Vector& z) const {
  return n_ineq > 0 ? ineq(z) : Vector{};
}

Matrix NlpInstance::eval_eq_jacobian(const Vector& z) const {
  return n_eq > 0 ? eq_jacobian(z) : Matrix(0, n_vars);
}

Matrix NlpInstance::eval_ineq_jacobian(const Vector& z) const {
  return n_ineq > 0 ? ineq_jacobian(z) : Matrix(0, n_vars);
}

namespace {

Vector unit_row_scales(const Matrix& jac, const Vector& var_scale) {
  Vector scales(jac.rows());
  for (Eigen::Index r = 0; r < jac.rows(); ++r) {
    const double norm =
        var_scale.size() > 0
            ? jac.row(r).cwiseProduct(var_scale.transpose()).lpNorm<Eigen::Infinity>()
            : jac.row(r).lpNorm<Eigen::Infinity>();
    scales[r] = norm > 0.0 ? std::clamp(1.0 / norm, 1e-8, 1e8) : 1.0;
  }
  return scales;
}

double row_error(const Matrix& analytic, const Matrix& numeric) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < analytic.rows(); ++r) {
    const double denom =
        std::max(1.0, analytic.row(r).lpNorm<Eigen::Infinity>());
    worst = std::max(
        worst, (analytic.row(r) - numeric.row(r)).lpNorm<Eigen::Infinity>() /
                   denom);
  }
  return worst;
}

}  // namespace

void scale_rows_at(NlpInstance& nlp, const Vector& z) {
  nlp.scaling.ineq_rows =
      unit_row_scales(nlp.eval_ineq_jacobian(z), nlp.scaling.variable);
  nlp.scaling.eq_rows =
      unit_row_scales(nlp.eval_eq_jacobian(z), nlp.scaling.variable);
}

double nlp_gradients_check(const NlpInstance& nlp, const Vector& point) {
  const Vector grad = nlp.cost_gradient(point);
  const Matrix grad_fd = finite_difference_jacobian(
      [&](const Vector& z) { return Vector::Constant(1, nlp.cost(z)); }, point);
  double worst = row_error(grad.transpose(), grad_fd);
  if (nlp.n_ineq > 0) {
    worst = std::max(worst, row_error(nlp.ineq_jacobian(point),
                                      finite_difference_jacobian(nlp.ineq, point)));
  }
  if (nlp.n_eq > 0) {
    worst = std::max(worst, row_error(nlp.eq_jacobian(point),
                                      finite_difference_jacobian(nlp.eq, point)));
  }
  return worst;
}

}  // namespace dcoc
