#pragma once

#include "bls/linalg.hpp"

namespace bls {

struct RidgeSolution {
  Matrix weights;  // k x c
  double lambda = 0.0;
};

/// Batch ridge regression W = (A^T A + lambda I)^{-1} A^T Y.
///
/// This is the reference every recursive update is checked against, so it
/// deliberately shares no code with the factor updates: it forms the Gram
/// matrix and solves with a plain LLT.
RidgeSolution ridge_solve(const Matrix& a, const Matrix& y, double lambda);

/// A^T A + lambda I
Matrix regularized_gram(const Matrix& a, double lambda);

/// State for node-dimension updates: F F^T = (A^T A + lambda I)^{-1},
/// W = F F^T A^T Y, plus A itself and the cached A^T Y.
struct NodeState {
  UpperTriangular f;
  Matrix w;
  Matrix a;
  Matrix aty;
  double lambda = 0.0;

  Index nodes() const { return f.dim(); }
  Index samples() const { return a.rows(); }
  Index outputs() const { return w.cols(); }
};

enum class InputForm { q_form, f_form };

/// State for sample-dimension updates. Only the member selected by `form`
/// among `q` and `f` is meaningful. A is not retained.
struct InputState {
  InputForm form = InputForm::q_form;
  Matrix q;           // (A^T A + lambda I)^{-1}, q_form
  UpperTriangular f;  // F F^T = q, f_form
  Matrix w;
  double lambda = 0.0;

  Index nodes() const { return w.rows(); }
  Index outputs() const { return w.cols(); }

  /// Q, reconstructed as F F^T in f_form.
  Matrix inverse_gram() const;
};

NodeState init_node_state(const Matrix& a, const Matrix& y, double lambda);

InputState init_input_state(const Matrix& a, const Matrix& y, double lambda, InputForm form);

}  // namespace bls
