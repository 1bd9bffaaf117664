#pragma once

#include "bls/ridge.hpp"

namespace bls {

/// Which side of the matrix inversion lemma an update uses.
///
/// `small_block` inverts a (rows x rows) matrix and is the automatic choice
/// when the row count is at most k, ties included; `large_block` works with
/// k x k matrices. Both give the same result; forcing one only changes cost.
enum class Branch { automatic, small_block, large_block };

bool use_small_block(Branch branch, Index rows, Index nodes);

/// Appends q enhancement-node columns H (one row per trained sample) and
/// updates F and W without refactoring. Y must be the label matrix the state
/// was trained on.
///
/// The Schur complement H^T H + lambda I - H^T A F F^T A^T H is factored with
/// an inverse Cholesky factorization; failure means H is numerically inside
/// span(A) for this lambda and raises FactorizationFailure.
NodeState add_nodes(NodeState state, const Matrix& h, const Matrix& y);

/// Appends p training rows to a Q-form state via the matrix inversion lemma.
InputState add_inputs_q(InputState state, const Matrix& ax, const Matrix& ya,
                        Branch branch = Branch::automatic);

/// Appends p training rows to an F-form state: F <- F V with V upper
/// triangular.
InputState add_inputs_f(InputState state, const Matrix& ax, const Matrix& ya,
                        Branch branch = Branch::automatic);

}  // namespace bls
