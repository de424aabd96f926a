#pragma once

// Random inputs shared by the unit, property and acceptance tests.

#include "ssdr/dataset.hpp"
#include "ssdr/numerics.hpp"
#include "ssdr/projection.hpp"
#include "ssdr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace ssdr::testing {

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

inline Matrix random_orthonormal(Eigen::Index p, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(p, p, rng));
  return qr.householderQ() * Matrix::Identity(p, p);
}

/// Q diag(d) Q^T with log-uniform eigenvalues spanning `cond`.
inline SymMatrix random_spd(Eigen::Index p, double cond, Rng& rng) {
  const Matrix q = random_orthonormal(p, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector d(p);
  for (Eigen::Index i = 0; i < p; ++i) d(i) = std::pow(cond, u(rng));
  d(0) = 1.0;
  if (p > 1) d(p - 1) = cond;
  return SymMatrix(q * d.asDiagonal() * q.transpose());
}

/// Wishart-like SPD matrix, well conditioned for moderate p.
inline SymMatrix random_cov(Eigen::Index p, Rng& rng) {
  const Matrix a = gaussian_matrix(p, 2 * p + 2, rng);
  return SymMatrix(a * a.transpose() / static_cast<double>(2 * p + 2) +
                   0.1 * Matrix::Identity(p, p));
}

/// Population parameters whose span(U) is an invariant subspace of every
/// covariance: Sigma_i = Q blockdiag(A_i, B) Q^T with B shared and
/// mu_i = Sigma_i (Sigma_1^-1 mu_1 + U0 c_i).
struct InvariantFixtureSpec {
  int k = 2;
  Eigen::Index p = 6;
  Eigen::Index q = 2;
};

inline TheoremFixture invariant_fixture(const InvariantFixtureSpec& spec, Rng& rng) {
  const Eigen::Index p = spec.p, q = spec.q;
  const Matrix qmat = random_orthonormal(p, rng);
  const Matrix u0 = qmat.leftCols(q);
  const Matrix b = random_cov(p - q, rng).mat();
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unif(0.2, 1.0);

  std::vector<SymMatrix> covs;
  std::vector<Vector> means;
  Vector mu1(p);
  for (Eigen::Index i = 0; i < p; ++i) mu1(i) = z(rng);
  Vector base;
  for (int c = 0; c < spec.k; ++c) {
    Matrix block = Matrix::Zero(p, p);
    block.topLeftCorner(q, q) = random_cov(q, rng).mat();
    block.bottomRightCorner(p - q, p - q) = b;
    const SymMatrix sigma(qmat * block * qmat.transpose());
    covs.push_back(sigma);
    if (c == 0) {
      means.push_back(mu1);
      base = sigma.mat().llt().solve(mu1);
    } else {
      Vector ci(q);
      for (Eigen::Index i = 0; i < q; ++i) ci(i) = z(rng);
      means.push_back(sigma.mat() * (base + u0 * ci));
    }
  }
  std::vector<double> priors;
  double total = 0.0;
  for (int c = 0; c < spec.k; ++c) {
    priors.push_back(unif(rng));
    total += priors.back();
  }
  for (double& w : priors) w /= total;
  // the reduced SVD rank of M equals q for generic draws
  return make_fixture(means, covs, priors, gaussian_matrix(p - q, p, rng));
}

/// n_per_class draws per class from N(mean_i, cov_i).
inline LabeledDataset gaussian_classes(const std::vector<Vector>& means,
                                       const std::vector<SymMatrix>& covs,
                                       std::size_t n_per_class, Rng& rng) {
  const Eigen::Index p = means.front().size();
  Matrix x(static_cast<Eigen::Index>(n_per_class * means.size()), p);
  std::vector<int> labels;
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < means.size(); ++c) {
    const Matrix l = covs[c].mat().llt().matrixL();
    for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
      x.row(row) = (means[c] + l * gaussian_matrix(p, 1, rng)).transpose();
      labels.push_back(static_cast<int>(c));
    }
  }
  return LabeledDataset(x, labels);
}

/// Subgradient residual of tr(S W) - log|W| + lambda * sum_{i != j} |W_ij| at W,
/// computed from scratch.
inline double glasso_kkt(const Matrix& s, const Matrix& w, double lambda) {
  const Matrix g = s - w.inverse();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      double r;
      if (i == j) {
        r = std::abs(g(i, j));
      } else if (w(i, j) != 0.0) {
        r = std::abs(g(i, j) + lambda * (w(i, j) > 0 ? 1.0 : -1.0));
      } else {
        r = std::max(0.0, std::abs(g(i, j)) - lambda);
      }
      worst = std::max(worst, r);
    }
  }
  return worst;
}

}  // namespace ssdr::testing
