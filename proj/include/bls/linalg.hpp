#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace bls {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Square upper-triangular factor with a nonzero diagonal.
///
/// Entries strictly below the diagonal are stored as exact zeros; the
/// constructor overwrites whatever was there.
class UpperTriangular {
 public:
  UpperTriangular() = default;
  explicit UpperTriangular(Matrix values);

  static UpperTriangular identity(Index dim);

  Index dim() const { return values_.rows(); }
  const Matrix& matrix() const { return values_; }
  double operator()(Index row, Index col) const { return values_(row, col); }

  /// F * F^T
  Matrix gram() const;

  /// this * other, both upper triangular.
  UpperTriangular times(const UpperTriangular& other) const;

  /// this * rhs for a general right-hand side.
  Matrix times(const Matrix& rhs) const;

  /// this^T * rhs
  Matrix transpose_times(const Matrix& rhs) const;

 private:
  Matrix values_;
};

enum class TriSide {
  left_inverse,            // X = F^{-1} B
  transpose_left_inverse,  // X = F^{-T} B
};

/// Upper factor V with V * V^T = M. Positive diagonal.
///
/// Throws NotSymmetric when M deviates from symmetry by more than
/// 1e-10 * max|M|, and NotPositiveDefinite when a pivot falls below
/// 1e-12 * max diag(M).
UpperTriangular upper_cholesky(const Matrix& m);

/// Upper factor F with F * F^T = M^{-1} (the inverse Cholesky factor).
UpperTriangular inverse_cholesky(const Matrix& m);

/// One rotation of the retriangularization: zeroes (row, col) by mixing
/// columns col and col + 1 as [x, y] <- [c x - s y, s x + c y].
struct GivensStep {
  Index row = 0;
  Index col = 0;
  double c = 1.0;
  double s = 0.0;
};

struct Retriangularized {
  UpperTriangular head;  // (k - rho) x (k - rho)
  Matrix t_block;        // (k - rho) x rho
  UpperTriangular g_block;  // rho x rho
  std::size_t rotations = 0;
};

/// Restores block-triangular form of an upper-triangular factor whose rows
/// past `boundary` were moved to the bottom.
///
/// Each moved row, last one first, has its entries left of the diagonal
/// annihilated by Givens rotations acting on adjacent column pairs
/// (j, j+1), applied from the right. The product of the rotations is
/// orthogonal, so F*F^T is preserved. Columns are finally sign-normalized so
/// both diagonal blocks have a positive diagonal.
///
/// Throws MalformedInput if the result is not block triangular, which means
/// the input was not a row-permuted upper-triangular matrix.
Retriangularized retriangularize(Matrix f_permuted, Index boundary,
                                 std::vector<GivensStep>* trace = nullptr);

/// Solves F X = B or F^T X = B.
Matrix tri_solve(const UpperTriangular& f, const Matrix& b, TriSide side);

/// Symmetry check plus (M + M^T) / 2. Throws NotSymmetric.
Matrix symmetrized(const Matrix& m);

/// (M + M^T) / 2 without the check, for products that are symmetric by
/// construction (A Q A^T, S^T S, ...) and differ from it only by rounding.
Matrix symmetric_part(const Matrix& m);

bool all_finite(const Matrix& m);

/// ||a - b||_F / ||b||_F, falling back to the absolute distance when b = 0.
double relative_deviation(const Matrix& a, const Matrix& b);

}  // namespace bls
