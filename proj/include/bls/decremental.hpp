#pragma once

#include <vector>

#include "bls/incremental.hpp"

namespace bls {

/// Columns to prune from a k-node state.
///
/// Indices must be strictly increasing, in [0, k), and leave at least one
/// node. The implied permutation keeps the surviving nodes in their
/// original order and sends the removed ones to the bottom in reverse, so
/// the first removed node ends up last.
class NodeRemovalPlan {
 public:
  NodeRemovalPlan(std::vector<Index> indices, Index nodes);

  const std::vector<Index>& indices() const { return indices_; }
  Index nodes() const { return nodes_; }
  Index removed() const { return static_cast<Index>(indices_.size()); }
  Index kept() const { return nodes_ - removed(); }

  /// order()[new_position] = old index.
  const std::vector<Index>& order() const { return order_; }

 private:
  std::vector<Index> indices_;
  std::vector<Index> order_;
  Index nodes_ = 0;
};

/// Rows to forget: their node activations and labels. The rows must have
/// been part of the training set; anything else shows up as
/// NotPositiveDefinite.
struct InputRemovalBatch {
  Matrix a;  // delta x k
  Matrix y;  // delta x c
};

/// Prunes nodes. Rows of F and W are reordered per the plan, F is
/// retriangularized by Givens rotations into [[F', T], [0, G]], and
/// W' = W_top - T G^{-1} W_bottom. The removed columns of A and rows of A^T Y
/// are dropped.
NodeState remove_nodes(NodeState state, const NodeRemovalPlan& plan);

/// Forgets training rows on a Q-form state:
///   Q' = B Q,  W' = B (W - Q A_d^T Y_d),
/// with B = I + Q A_d^T (I - A_d Q A_d^T)^{-1} A_d when delta <= k and
/// B = (I - Q A_d^T A_d)^{-1} otherwise.
InputState remove_inputs_q(InputState state, const InputRemovalBatch& batch,
                           Branch branch = Branch::automatic);

/// Forgets training rows on an F-form state: F' = F V with S = A_d F and
///   V V^T = I + S^T (I - S S^T)^{-1} S   (delta <= k, via an inverse Cholesky
///                                          factor of I - S S^T), or
///   V V^T = (I - S^T S)^{-1}             (delta > k),
/// then W' = F' V^T F^{-1} W - F' F'^T A_d^T Y_d.
InputState remove_inputs_f(InputState state, const InputRemovalBatch& batch,
                           Branch branch = Branch::automatic);

}  // namespace bls
