#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ssdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction symmetrizes the input as (A + A^T)/2,
/// so (i, j) and (j, i) always hold the same bits.
class SymMatrix {
public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& a);

  static SymMatrix identity(Eigen::Index p);
  static SymMatrix diagonal(const Vector& d);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Matrix& mat() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

private:
  Matrix m_;
};

/// Throws InvalidInput when the matrix is empty or holds NaN/Inf.
void require_finite(const Matrix& m, const char* what);

/// Flips column signs so that the first entry of non-negligible magnitude in
/// each column is positive. Applied to both factors when `partner` is given.
void canonicalize_signs(Matrix& cols, Matrix* partner = nullptr);

struct ReducedSvd {
  Matrix u;                     // p x q, column-orthonormal
  Vector singular_values;       // all min(rows, cols) values, non-increasing
  Matrix v;                     // s x q
  Eigen::Index rank = 0;        // q
};

inline constexpr double kDefaultRankTol = 1e-10;

/// Reduced SVD keeping the singular triplets above rank_tol * d[0].
ReducedSvd reduced_svd(const Matrix& m, double rank_tol = kDefaultRankTol);

/// First r left singular vectors of m from a full SVD (orthonormal completion
/// beyond the numerical rank), with the same sign convention as reduced_svd.
Matrix left_singular_basis(const Matrix& m, Eigen::Index r,
                           Vector* singular_values = nullptr);

/// Lower Cholesky factor. Throws NotSpd naming the first non-positive pivot.
Matrix cholesky_lower(const SymMatrix& s);

struct LogdetInverse {
  double logdet = 0.0;
  SymMatrix inverse;
};

LogdetInverse spd_logdet_and_inverse(const SymMatrix& s);

struct SymEigen {
  Vector values;   // descending
  Matrix vectors;  // columns match values
};

SymEigen sym_eigen(const SymMatrix& s);

/// Smallest eigenvalue; convenience for SPD checks.
double min_eigenvalue(const SymMatrix& s);

}  // namespace ssdr
