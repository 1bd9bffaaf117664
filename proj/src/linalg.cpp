#include "bls/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bls/error.hpp"

namespace bls {

namespace {

constexpr double kSymmetryTolerance = 1e-10;
constexpr double kPivotTolerance = 1e-12;

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Standard lower Cholesky L L^T = M on an already-symmetrized matrix, with
// the relative pivot guard applied after the fact: the factorization's
// pivots are exactly diag(L)^2.
Matrix lower_cholesky(const Matrix& m) {
  const Index n = m.rows();
  if (n == 0) return Matrix(0, 0);
  if (!all_finite(m)) {
    throw NotPositiveDefinite("matrix contains non-finite values");
  }
  const double max_diag = m.diagonal().maxCoeff();
  if (!(max_diag > 0.0)) {
    throw NotPositiveDefinite("non-positive diagonal");
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("non-positive pivot in " + shape(m) + " factorization");
  }
  Matrix l = llt.matrixL();
  const double threshold = kPivotTolerance * max_diag;
  for (Index i = 0; i < n; ++i) {
    const double pivot = l(i, i) * l(i, i);
    if (!(pivot > threshold)) {
      throw NotPositiveDefinite("pivot " + std::to_string(i) + " below " +
                                std::to_string(threshold));
    }
  }
  return l;
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch(std::string(what) + " expects a square matrix, got " + shape(m));
  }
}

}  // namespace

UpperTriangular::UpperTriangular(Matrix values) : values_(std::move(values)) {
  require_square(values_, "UpperTriangular");
  const Index n = values_.rows();
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) values_(i, j) = 0.0;
    if (values_(j, j) == 0.0) {
      throw SingularFactor("zero diagonal entry at " + std::to_string(j));
    }
  }
}

UpperTriangular UpperTriangular::identity(Index dim) {
  return UpperTriangular(Matrix::Identity(dim, dim));
}

Matrix UpperTriangular::gram() const {
  Matrix out = values_.triangularView<Eigen::Upper>() * values_.transpose();
  return out;
}

UpperTriangular UpperTriangular::times(const UpperTriangular& other) const {
  if (other.dim() != dim()) {
    throw DimensionMismatch("triangular product " + shape(values_) + " * " +
                            shape(other.values_));
  }
  Matrix out = values_.triangularView<Eigen::Upper>() * other.values_;
  return UpperTriangular(std::move(out));
}

Matrix UpperTriangular::times(const Matrix& rhs) const {
  if (rhs.rows() != dim()) {
    throw DimensionMismatch("triangular product " + shape(values_) + " * " + shape(rhs));
  }
  Matrix out = values_.triangularView<Eigen::Upper>() * rhs;
  return out;
}

Matrix UpperTriangular::transpose_times(const Matrix& rhs) const {
  if (rhs.rows() != dim()) {
    throw DimensionMismatch("triangular product " + shape(values_) + "^T * " + shape(rhs));
  }
  Matrix out = values_.transpose().triangularView<Eigen::Lower>() * rhs;
  return out;
}

Matrix symmetrized(const Matrix& m) {
  require_square(m, "symmetrized");
  if (m.size() == 0) return m;
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * scale) {
    throw NotSymmetric("asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  return 0.5 * (m + m.transpose());
}

Matrix symmetric_part(const Matrix& m) {
  require_square(m, "symmetric_part");
  return 0.5 * (m + m.transpose());
}

UpperTriangular upper_cholesky(const Matrix& m) {
  // Factor the index-reversed matrix J M J = L L^T; then V = J L J is upper
  // triangular with V V^T = M.
  Matrix reversed = symmetrized(m).reverse();
  Matrix l = lower_cholesky(reversed);
  return UpperTriangular(l.reverse());
}

UpperTriangular inverse_cholesky(const Matrix& m) {
  // M = L L^T  =>  M^{-1} = L^{-T} L^{-1}, and L^{-T} is upper triangular.
  Matrix l = lower_cholesky(symmetrized(m));
  const Index n = l.rows();
  Matrix l_inv = Matrix::Identity(n, n);
  l.triangularView<Eigen::Lower>().solveInPlace(l_inv);
  return UpperTriangular(l_inv.transpose());
}

Retriangularized retriangularize(Matrix f, Index boundary, std::vector<GivensStep>* trace) {
  require_square(f, "retriangularize");
  const Index k = f.rows();
  if (boundary < 0 || boundary > k) {
    throw IndexOutOfRange("boundary " + std::to_string(boundary) + " outside [0, " +
                          std::to_string(k) + "]");
  }
  if (!all_finite(f)) throw MalformedInput("non-finite entries");

  std::size_t rotations = 0;
  for (Index r = k - 1; r >= boundary; --r) {
    Index lead = 0;
    while (lead < r && f(r, lead) == 0.0) ++lead;
    for (Index j = lead; j < r; ++j) {
      const double a = f(r, j);
      if (a == 0.0) continue;
      const double b = f(r, j + 1);
      const double h = std::hypot(a, b);
      const double c = b / h;
      const double s = a / h;
      // Rows below r are zero in columns j and j + 1.
      double* col_j = f.col(j).data();
      double* col_n = f.col(j + 1).data();
      for (Index i = 0; i < r; ++i) {
        const double x = col_j[i];
        const double y = col_n[i];
        col_j[i] = c * x - s * y;
        col_n[i] = s * x + c * y;
      }
      col_j[r] = 0.0;
      col_n[r] = h;
      ++rotations;
      if (trace != nullptr) trace->push_back({r, j, c, s});
    }
  }

  for (Index j = 0; j < boundary; ++j) {
    for (Index i = j + 1; i < k; ++i) {
      if (f(i, j) != 0.0) {
        throw MalformedInput("entry (" + std::to_string(i) + ", " + std::to_string(j) +
                             ") survives triangularization");
      }
    }
  }
  for (Index j = 0; j < k; ++j) {
    if (f(j, j) == 0.0) {
      throw MalformedInput("zero diagonal at " + std::to_string(j) + " after rotation");
    }
    if (f(j, j) < 0.0) f.col(j).head(j + 1) *= -1.0;
  }

  Retriangularized out;
  out.head = UpperTriangular(f.topLeftCorner(boundary, boundary));
  out.t_block = f.topRightCorner(boundary, k - boundary);
  out.g_block = UpperTriangular(f.bottomRightCorner(k - boundary, k - boundary));
  out.rotations = rotations;
  return out;
}

Matrix tri_solve(const UpperTriangular& f, const Matrix& b, TriSide side) {
  if (b.rows() != f.dim()) {
    throw DimensionMismatch("tri_solve " + shape(f.matrix()) + " vs " + shape(b));
  }
  for (Index i = 0; i < f.dim(); ++i) {
    if (f(i, i) == 0.0) throw SingularFactor("zero diagonal at " + std::to_string(i));
  }
  Matrix x = b;
  if (side == TriSide::left_inverse) {
    f.matrix().triangularView<Eigen::Upper>().solveInPlace(x);
  } else {
    f.matrix().transpose().triangularView<Eigen::Lower>().solveInPlace(x);
  }
  return x;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

double relative_deviation(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("relative_deviation " + shape(a) + " vs " + shape(b));
  }
  const double diff = (a - b).norm();
  const double ref = b.norm();
  return ref > 0.0 ? diff / ref : diff;
}

}  // namespace bls
