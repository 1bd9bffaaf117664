#include "bls/decremental.hpp"

#include <string>

#include "bls/error.hpp"

namespace bls {

namespace {

void check_batch(const InputState& state, InputForm expected, const InputRemovalBatch& batch,
                 const char* op) {
  if (state.form != expected) {
    throw InvalidConfig(std::string(op) + " called on the wrong state form");
  }
  if (batch.a.rows() < 1) throw DimensionMismatch(std::string(op) + ": empty removal batch");
  if (batch.a.cols() != state.nodes()) {
    throw DimensionMismatch(std::string(op) + ": rows have " + std::to_string(batch.a.cols()) +
                            " columns, state has " + std::to_string(state.nodes()) + " nodes");
  }
  if (batch.y.rows() != batch.a.rows() || batch.y.cols() != state.outputs()) {
    throw DimensionMismatch(std::string(op) + ": label block shape mismatch");
  }
}

}  // namespace

NodeRemovalPlan::NodeRemovalPlan(std::vector<Index> indices, Index nodes)
    : indices_(std::move(indices)), nodes_(nodes) {
  if (indices_.empty()) throw IndexOutOfRange("no nodes to remove");
  if (removed() >= nodes_) {
    throw IndexOutOfRange("cannot remove " + std::to_string(removed()) + " of " +
                          std::to_string(nodes_) + " nodes");
  }
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    const Index idx = indices_[i];
    if (idx < 0 || idx >= nodes_) {
      throw IndexOutOfRange("node index " + std::to_string(idx) + " outside [0, " +
                            std::to_string(nodes_) + ")");
    }
    if (i > 0 && idx <= indices_[i - 1]) {
      throw IndexOutOfRange("node indices must be strictly increasing");
    }
  }
  std::vector<bool> drop(static_cast<std::size_t>(nodes_), false);
  for (Index idx : indices_) drop[static_cast<std::size_t>(idx)] = true;
  order_.reserve(static_cast<std::size_t>(nodes_));
  for (Index j = 0; j < nodes_; ++j) {
    if (!drop[static_cast<std::size_t>(j)]) order_.push_back(j);
  }
  order_.insert(order_.end(), indices_.rbegin(), indices_.rend());
}

NodeState remove_nodes(NodeState state, const NodeRemovalPlan& plan) {
  const Index k = state.nodes();
  if (plan.nodes() != k) {
    throw DimensionMismatch("removal plan built for " + std::to_string(plan.nodes()) +
                            " nodes, state has " + std::to_string(k));
  }
  const Index kept = plan.kept();
  const auto& order = plan.order();

  Matrix f(k, k);
  Matrix w(k, state.outputs());
  for (Index pos = 0; pos < k; ++pos) {
    f.row(pos) = state.f.matrix().row(order[static_cast<std::size_t>(pos)]);
    w.row(pos) = state.w.row(order[static_cast<std::size_t>(pos)]);
  }

  Retriangularized blocks = retriangularize(std::move(f), kept);

  Matrix g_inv_w;
  try {
    g_inv_w = tri_solve(blocks.g_block, w.bottomRows(k - kept), TriSide::left_inverse);
  } catch (const SingularFactor& e) {
    throw SingularG(e.what());
  }

  Matrix a(state.a.rows(), kept);
  Matrix aty(kept, state.outputs());
  for (Index pos = 0; pos < kept; ++pos) {
    const Index src = order[static_cast<std::size_t>(pos)];
    a.col(pos) = state.a.col(src);
    aty.row(pos) = state.aty.row(src);
  }

  state.w = w.topRows(kept) - blocks.t_block * g_inv_w;
  state.f = std::move(blocks.head);
  state.a = std::move(a);
  state.aty = std::move(aty);
  return state;
}

InputState remove_inputs_q(InputState state, const InputRemovalBatch& batch, Branch branch) {
  check_batch(state, InputForm::q_form, batch, "remove_inputs_q");
  const Index delta = batch.a.rows();
  const Index k = state.nodes();
  const Matrix u = state.q * batch.a.transpose();  // Q A_d^T, k x delta
  Matrix shifted = state.w - u * batch.y;          // W - Q A_d^T Y_d

  if (use_small_block(branch, delta, k)) {
    Matrix inner = -batch.a * u;  // I - A_d Q A_d^T
    inner.diagonal().array() += 1.0;
    // inner^{-1} = Fi Fi^T; Q' = Q + (U Fi)(U Fi)^T.
    const UpperTriangular fi = inverse_cholesky(symmetric_part(inner));
    const Matrix z = fi.transpose_times(u.transpose()).transpose();  // U Fi
    state.q.noalias() += z * z.transpose();
    const Matrix correction = fi.transpose_times(batch.a * shifted);
    state.w = shifted + z * correction;
  } else {
    // (I - Q A_d^T A_d)^{-1} Q through the congruent SPD matrix: with
    // Q = V V^T and S = A_d V it equals V (I - S^T S)^{-1} V^T. A plain LU of
    // the unsymmetric I - Q A_d^T A_d loses several digits once most of the
    // data has been removed.
    const UpperTriangular v = upper_cholesky(state.q);
    const Matrix s = v.transpose_times(batch.a.transpose()).transpose();  // A_d V
    Matrix inner = -s.transpose() * s;
    inner.diagonal().array() += 1.0;
    const UpperTriangular g = inverse_cholesky(symmetric_part(inner));
    const UpperTriangular z = v.times(g);  // Z Z^T = Q'
    // W' = V G G^T V^{-1} (W - Q A_d^T Y_d)
    state.w = z.times(g.transpose_times(tri_solve(v, shifted, TriSide::left_inverse)));
    state.q = z.gram();
  }
  state.q = 0.5 * (state.q + state.q.transpose());
  return state;
}

InputState remove_inputs_f(InputState state, const InputRemovalBatch& batch, Branch branch) {
  check_batch(state, InputForm::f_form, batch, "remove_inputs_f");
  const Index delta = batch.a.rows();
  const Index k = state.nodes();
  const Matrix s = state.f.transpose_times(batch.a.transpose()).transpose();  // A_d F

  UpperTriangular v;
  if (use_small_block(branch, delta, k)) {
    Matrix inner = -s * s.transpose();  // I - S S^T
    inner.diagonal().array() += 1.0;
    const UpperTriangular f_tilde = inverse_cholesky(symmetric_part(inner));
    const Matrix kk = f_tilde.transpose_times(s).transpose();  // S^T F~, k x delta
    Matrix target = kk * kk.transpose();
    target.diagonal().array() += 1.0;
    v = upper_cholesky(symmetric_part(target));
  } else {
    Matrix target = -s.transpose() * s;  // I - S^T S
    target.diagonal().array() += 1.0;
    v = inverse_cholesky(symmetric_part(target));
  }

  const UpperTriangular f_next = state.f.times(v);
  const Matrix f_inv_w = tri_solve(state.f, state.w, TriSide::left_inverse);
  const Matrix carried = v.transpose_times(f_inv_w);                             // V^T F^{-1} W
  const Matrix removed = f_next.transpose_times(batch.a.transpose() * batch.y);  // F'^T A_d^T Y_d
  state.w = f_next.times(carried - removed);
  state.f = f_next;
  return state;
}

}  // namespace bls
