#include "ssdr/numerics.hpp"

#include "ssdr/errors.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

namespace ssdr {

SymMatrix::SymMatrix(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw InvalidInput("SymMatrix requires a square matrix, got " +
                       std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()));
  }
  if (!a.allFinite()) throw InvalidInput("SymMatrix entries must be finite");
  m_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index p) {
  return SymMatrix(Matrix::Identity(p, p));
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
  return SymMatrix(Matrix(d.asDiagonal()));
}

void require_finite(const Matrix& m, const char* what) {
  if (m.size() == 0) throw InvalidInput(std::string(what) + ": empty matrix");
  if (!m.allFinite())
    throw InvalidInput(std::string(what) + ": non-finite entries");
}

void canonicalize_signs(Matrix& cols, Matrix* partner) {
  for (Eigen::Index j = 0; j < cols.cols(); ++j) {
    const double scale = cols.col(j).cwiseAbs().maxCoeff();
    if (scale == 0.0) continue;
    for (Eigen::Index i = 0; i < cols.rows(); ++i) {
      const double v = cols(i, j);
      if (std::abs(v) > 1e-8 * scale) {
        if (v < 0.0) {
          cols.col(j) *= -1.0;
          if (partner != nullptr && j < partner->cols()) partner->col(j) *= -1.0;
        }
        break;
      }
    }
  }
}

ReducedSvd reduced_svd(const Matrix& m, double rank_tol) {
  require_finite(m, "reduced_svd");
  if (!(rank_tol > 0.0)) throw InvalidParameter("reduced_svd: rank_tol must be > 0");

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ReducedSvd out;
  out.singular_values = svd.singularValues();
  const double top = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
  Eigen::Index q = 0;
  while (q < out.singular_values.size() && top > 0.0 &&
         out.singular_values(q) > rank_tol * top) {
    ++q;
  }
  out.rank = q;
  out.u = svd.matrixU().leftCols(q);
  out.v = svd.matrixV().leftCols(q);
  canonicalize_signs(out.u, &out.v);
  return out;
}

Matrix left_singular_basis(const Matrix& m, Eigen::Index r,
                           Vector* singular_values) {
  require_finite(m, "left_singular_basis");
  if (r < 0 || r > m.rows()) {
    throw InvalidParameter("left_singular_basis: r out of range");
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
  if (singular_values != nullptr) *singular_values = svd.singularValues();
  Matrix u = svd.matrixU().leftCols(r);
  canonicalize_signs(u);
  return u;
}

Matrix cholesky_lower(const SymMatrix& s) {
  const Eigen::Index p = s.dim();
  if (p == 0) throw InvalidInput("cholesky: empty matrix");
  Matrix l = Matrix::Zero(p, p);
  const Matrix& a = s.mat();
  for (Eigen::Index j = 0; j < p; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0)) {
      throw NotSpd(static_cast<std::size_t>(j),
                   "matrix is not positive definite (pivot " +
                       std::to_string(j) + " = " + std::to_string(d) + ")");
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

LogdetInverse spd_logdet_and_inverse(const SymMatrix& s) {
  const Matrix l = cholesky_lower(s);
  const Eigen::Index p = s.dim();
  LogdetInverse out;
  out.logdet = 2.0 * l.diagonal().array().log().sum();
  Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));
  // L^-T L^-1 is symmetric by construction; a Newton step here would not be
  out.inverse = SymMatrix(Matrix(linv.transpose() * linv));
  return out;
}

SymEigen sym_eigen(const SymMatrix& s) {
  if (s.dim() == 0) throw InvalidInput("sym_eigen: empty matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.mat());
  if (es.info() != Eigen::Success) {
    throw NumericalDomainError("sym_eigen: eigendecomposition failed");
  }
  SymEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  canonicalize_signs(out.vectors);
  return out;
}

double min_eigenvalue(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace ssdr
