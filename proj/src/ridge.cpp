#include "bls/ridge.hpp"

#include <cmath>
#include <string>

#include "bls/error.hpp"

namespace bls {

namespace {

void check_problem(const Matrix& a, const Matrix& y, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidConfig("lambda must be a positive finite number, got " + std::to_string(lambda));
  }
  if (a.rows() != y.rows()) {
    throw DimensionMismatch("A has " + std::to_string(a.rows()) + " rows but Y has " +
                            std::to_string(y.rows()));
  }
}

}  // namespace

Matrix regularized_gram(const Matrix& a, double lambda) {
  const Index k = a.cols();
  Matrix gram = Matrix::Zero(k, k);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  gram.diagonal().array() += lambda;
  return gram;
}

RidgeSolution ridge_solve(const Matrix& a, const Matrix& y, double lambda) {
  check_problem(a, y, lambda);
  Eigen::LLT<Matrix> llt(regularized_gram(a, lambda));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("regularized Gram matrix");
  }
  Matrix rhs = a.transpose() * y;
  return {llt.solve(rhs), lambda};
}

Matrix InputState::inverse_gram() const {
  return form == InputForm::q_form ? q : f.gram();
}

NodeState init_node_state(const Matrix& a, const Matrix& y, double lambda) {
  check_problem(a, y, lambda);
  NodeState s;
  s.lambda = lambda;
  s.a = a;
  s.aty = a.transpose() * y;
  s.f = inverse_cholesky(regularized_gram(a, lambda));
  s.w = s.f.times(s.f.transpose_times(s.aty));
  return s;
}

InputState init_input_state(const Matrix& a, const Matrix& y, double lambda, InputForm form) {
  check_problem(a, y, lambda);
  InputState s;
  s.form = form;
  s.lambda = lambda;
  const Matrix aty = a.transpose() * y;
  const UpperTriangular f = inverse_cholesky(regularized_gram(a, lambda));
  if (form == InputForm::q_form) {
    const Matrix q = f.gram();
    s.q = 0.5 * (q + q.transpose());
    s.w = s.q * aty;
  } else {
    s.f = f;
    s.w = f.times(f.transpose_times(aty));
  }
  return s;
}

}  // namespace bls
