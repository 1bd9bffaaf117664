#include "bls/incremental.hpp"

#include <string>

#include "bls/error.hpp"

namespace bls {

namespace {

void check_rows(const InputState& state, InputForm expected, const Matrix& rows,
                const Matrix& labels, const char* op) {
  if (state.form != expected) {
    throw InvalidConfig(std::string(op) + " called on the wrong state form");
  }
  if (rows.cols() != state.nodes()) {
    throw DimensionMismatch(std::string(op) + ": rows have " + std::to_string(rows.cols()) +
                            " columns, state has " + std::to_string(state.nodes()) + " nodes");
  }
  if (labels.rows() != rows.rows() || labels.cols() != state.outputs()) {
    throw DimensionMismatch(std::string(op) + ": label block shape mismatch");
  }
}

}  // namespace

bool use_small_block(Branch branch, Index rows, Index nodes) {
  switch (branch) {
    case Branch::small_block:
      return true;
    case Branch::large_block:
      return false;
    case Branch::automatic:
      break;
  }
  return rows <= nodes;
}

NodeState add_nodes(NodeState state, const Matrix& h, const Matrix& y) {
  const Index q = h.cols();
  if (q < 1) throw DimensionMismatch("add_nodes needs at least one new column");
  if (h.rows() != state.samples() || y.rows() != state.samples()) {
    throw DimensionMismatch("add_nodes: H and Y need " + std::to_string(state.samples()) +
                            " rows");
  }
  if (y.cols() != state.outputs()) throw DimensionMismatch("add_nodes: Y column count");

  const Index k = state.nodes();
  const Matrix ath = state.a.transpose() * h;  // k x q
  const Matrix p = state.f.transpose_times(ath);
  Matrix schur = h.transpose() * h - p.transpose() * p;
  schur.diagonal().array() += state.lambda;

  UpperTriangular g;
  try {
    g = inverse_cholesky(symmetric_part(schur));
  } catch (const NotPositiveDefinite& e) {
    throw FactorizationFailure(std::string("new nodes are collinear with existing ones: ") +
                               e.what());
  }

  const Matrix t = -state.f.times(p * g.matrix());
  const Matrix hty = h.transpose() * y;
  const Matrix innovation = hty - ath.transpose() * state.w;  // H^T Y - H^T A W
  const Matrix gt_innov = g.transpose_times(innovation);

  Matrix w(k + q, state.outputs());
  w.topRows(k) = state.w + t * gt_innov;
  w.bottomRows(q) = g.times(gt_innov);

  Matrix f = Matrix::Zero(k + q, k + q);
  f.topLeftCorner(k, k) = state.f.matrix();
  f.topRightCorner(k, q) = t;
  f.bottomRightCorner(q, q) = g.matrix();

  Matrix a(state.a.rows(), k + q);
  a << state.a, h;
  Matrix aty(k + q, state.outputs());
  aty << state.aty, hty;

  state.f = UpperTriangular(std::move(f));
  state.w = std::move(w);
  state.a = std::move(a);
  state.aty = std::move(aty);
  return state;
}

InputState add_inputs_q(InputState state, const Matrix& ax, const Matrix& ya, Branch branch) {
  check_rows(state, InputForm::q_form, ax, ya, "add_inputs_q");
  const Index p = ax.rows();
  const Index k = state.nodes();
  if (p == 0) return state;

  Matrix b;
  if (use_small_block(branch, p, k)) {
    const Matrix qa = state.q * ax.transpose();  // k x p
    Matrix inner = ax * qa;
    inner.diagonal().array() += 1.0;
    Eigen::LLT<Matrix> llt(inner);
    if (llt.info() != Eigen::Success) {
      throw SingularInnerMatrix("I + A_x Q A_x^T is not positive definite");
    }
    b = llt.solve(qa.transpose()).transpose();  // Q A_x^T (I + A_x Q A_x^T)^{-1}
    state.q.noalias() -= b * qa.transpose();
  } else {
    Matrix m = state.q * (ax.transpose() * ax);
    m.diagonal().array() += 1.0;
    Eigen::PartialPivLU<Matrix> lu(m);
    state.q = lu.solve(state.q);
    if (!all_finite(state.q)) throw SingularInnerMatrix("I + Q A_x^T A_x is singular");
    b = state.q * ax.transpose();
  }
  state.q = 0.5 * (state.q + state.q.transpose());
  state.w += b * (ya - ax * state.w);
  return state;
}

InputState add_inputs_f(InputState state, const Matrix& ax, const Matrix& ya, Branch branch) {
  check_rows(state, InputForm::f_form, ax, ya, "add_inputs_f");
  const Index p = ax.rows();
  const Index k = state.nodes();
  if (p == 0) return state;

  const Matrix s = state.f.transpose_times(ax.transpose()).transpose();  // A_x F, p x k
  UpperTriangular v;
  try {
    if (use_small_block(branch, p, k)) {
      Matrix inner = s * s.transpose();
      inner.diagonal().array() += 1.0;
      Eigen::LLT<Matrix> llt(inner);
      if (llt.info() != Eigen::Success) {
        throw FactorizationFailure("I + S S^T is not positive definite");
      }
      Matrix target = -s.transpose() * llt.solve(s);  // I - S^T (I + S S^T)^{-1} S
      target.diagonal().array() += 1.0;
      v = upper_cholesky(symmetric_part(target));
    } else {
      Matrix target = s.transpose() * s;
      target.diagonal().array() += 1.0;
      v = inverse_cholesky(symmetric_part(target));
    }
  } catch (const NotPositiveDefinite& e) {
    throw FactorizationFailure(e.what());
  }

  state.f = state.f.times(v);
  const Matrix residual = ya - ax * state.w;
  const Matrix ft_axt = state.f.transpose_times(ax.transpose());
  state.w += state.f.times(ft_axt * residual);
  return state;
}

}  // namespace bls
