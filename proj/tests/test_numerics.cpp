#include "ssdr/errors.hpp"
#include "ssdr/numerics.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

using namespace ssdr;
using ssdr::testing::random_spd;

TEST(SymMatrix, ConstructionSymmetrizes) {
  Matrix a(2, 2);
  a << 1.0, 2.0, 4.0, 3.0;
  const SymMatrix s(a);
  EXPECT_EQ(s(0, 1), s(1, 0));
  EXPECT_DOUBLE_EQ(s(0, 1), 3.0);
}

TEST(LogdetInverse, TwoByTwoOracle) {
  Matrix a(2, 2);
  a << 1.0, 0.5, 0.5, 1.0;
  const auto r = spd_logdet_and_inverse(SymMatrix(a));
  EXPECT_NEAR(r.logdet, -0.2876820724517809, 1e-14);
  EXPECT_NEAR(r.inverse(0, 0), 1.3333333333333333, 1e-14);
  EXPECT_NEAR(r.inverse(0, 1), -0.6666666666666666, 1e-14);
}

TEST(LogdetInverse, RandomSpdResidual) {
  Rng rng(11);
  for (double cond : {1.0, 1e2, 1e4, 1e6}) {
    for (Eigen::Index p : {2, 5, 20, 50}) {
      const SymMatrix s = random_spd(p, cond, rng);
      const auto r = spd_logdet_and_inverse(s);
      const double resid =
          (s.mat() * r.inverse.mat() - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
      EXPECT_LE(resid, 1e-8 * static_cast<double>(p)) << "p=" << p << " cond=" << cond;
      const Vector ev = s.mat().selfadjointView<Eigen::Lower>().eigenvalues();
      EXPECT_NEAR(r.logdet, ev.array().log().sum(), 1e-9 * static_cast<double>(p));
    }
  }
}

TEST(LogdetInverse, DiagonalAtCond1e10) {
  Vector d(4);
  d << 1.0, 1e-4, 1e3, 1e-10;
  const auto r = spd_logdet_and_inverse(SymMatrix::diagonal(d));
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(r.inverse(i, i) * d(i), 1.0, 1e-12);
  }
  EXPECT_NEAR(r.logdet, d.array().log().sum(), 1e-10);
}

TEST(Cholesky, NotSpdNamesPivot) {
  Matrix a(3, 3);
  a << 1, 0, 0, 0, -1, 0, 0, 0, 1;
  try {
    cholesky_lower(SymMatrix(a));
    FAIL() << "expected NotSpd";
  } catch (const NotSpd& e) {
    EXPECT_EQ(e.pivot(), 1);
  }
}

TEST(Numerics, NonFiniteRejected) {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = std::nan("");
  EXPECT_THROW(require_finite(a, "test"), InvalidInput);
  EXPECT_THROW(reduced_svd(Matrix(0, 0)), InvalidInput);
}

TEST(ReducedSvd, RankOneOracle) {
  Matrix m(2, 3);
  m << 0.5, 1.0, 0.0, 0.0, 0.0, 0.0;
  const auto s = reduced_svd(m);
  EXPECT_EQ(s.rank, 1);
  EXPECT_NEAR(s.singular_values(0), 1.118033988749895, 1e-14);
  EXPECT_NEAR(s.singular_values(1), 0.0, 1e-14);
  EXPECT_NEAR(s.u(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(s.u(1, 0), 0.0, 1e-14);
}

TEST(ReducedSvd, ReconstructionAndOrthonormality) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index p = 3 + trial % 8, rank = 1 + trial % 3;
    const Matrix m = ssdr::testing::gaussian_matrix(p, rank, rng) *
                     ssdr::testing::gaussian_matrix(rank, 2 * p, rng);
    const auto s = reduced_svd(m);
    ASSERT_EQ(s.rank, rank);
    const Matrix recon = s.u * s.singular_values.head(rank).asDiagonal() * s.v.transpose();
    EXPECT_LE((recon - m).norm(), 1e-10 * m.norm());
    EXPECT_LE((s.u.transpose() * s.u - Matrix::Identity(rank, rank)).norm(), 1e-12);
    for (Eigen::Index i = 1; i < s.singular_values.size(); ++i) {
      EXPECT_GE(s.singular_values(i - 1), s.singular_values(i));
    }
  }
}

TEST(SignConvention, FirstSignificantEntryPositive) {
  Matrix u(3, 2);
  u << 0.0, -0.6, -1.0, 0.8, 0.0, 0.0;
  Matrix v = Matrix::Identity(2, 2);
  canonicalize_signs(u, &v);
  EXPECT_GT(u(1, 0), 0.0);
  EXPECT_GT(u(0, 1), 0.0);
  EXPECT_LT(v(0, 0), 0.0);  // partner flipped with its column
}

TEST(SignConvention, SvdIsDeterministicUnderInputSignFlip) {
  Rng rng(3);
  const Matrix m = ssdr::testing::gaussian_matrix(5, 7, rng);
  const Matrix a = left_singular_basis(m, 3);
  const Matrix b = left_singular_basis(-m, 3);
  EXPECT_LE((a - b).norm(), 1e-12);
}

TEST(LeftSingularBasis, CompletesBeyondRank) {
  Matrix m = Matrix::Zero(4, 2);
  m(0, 0) = 1.0;
  const Matrix u = left_singular_basis(m, 4);
  EXPECT_LE((u.transpose() * u - Matrix::Identity(4, 4)).norm(), 1e-12);
}

TEST(SymEigen, DescendingAndReconstructs) {
  Rng rng(9);
  const SymMatrix s = random_spd(6, 100.0, rng);
  const auto e = sym_eigen(s);
  for (Eigen::Index i = 1; i < 6; ++i) EXPECT_GE(e.values(i - 1), e.values(i));
  const Matrix recon = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
  EXPECT_LE((recon - s.mat()).norm(), 1e-10 * s.mat().norm());
  EXPECT_NEAR(min_eigenvalue(s), e.values(5), 1e-10);
}
