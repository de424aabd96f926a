#pragma once

#include "ssdr/dataset.hpp"
#include "ssdr/estimators.hpp"
#include "ssdr/numerics.hpp"

#include <vector>

namespace ssdr {

/// Stabilized dimension-reduction matrix
///   [W_2 x_2 - W_1 x_1 | ... | W_k x_k - W_1 x_1 | S_2 - S_1 | ... | S_k - S_1]
/// of shape p x (k-1)(p+1). The lowest class id is the reference class.
Matrix build_mhat(const std::vector<ClassSummary>& summaries,
                  const PrecisionEstimatorSpec& spec);

/// Same matrix from precisions already estimated (one per summary, same order).
Matrix build_mhat(const std::vector<ClassSummary>& summaries,
                  const std::vector<SymMatrix>& precisions);

/// Population version with the true parameters (means, covariances).
Matrix build_population_m(const std::vector<Vector>& means,
                          const std::vector<SymMatrix>& covs);

struct ProjectionBasis {
  Matrix u;                  // p x r, column-orthonormal
  Vector singular_values;    // all singular values of M-hat, descending
  Eigen::Index numerical_rank = 0;
  Eigen::Index p = 0;
  Eigen::Index r = 0;
  /// Set when r exceeds the numerical rank; the extra columns come from the
  /// orthonormal completion of the SVD.
  bool beyond_rank = false;
};

ProjectionBasis projection_basis(const Matrix& mhat, Eigen::Index r,
                                 double rank_tol = kDefaultRankTol);

/// Features replaced by features * u (n x r); labels unchanged.
LabeledDataset project(const ProjectionBasis& basis, const LabeledDataset& ds);

/// Known-parameter setting used to exercise the invariance theorem.
struct TheoremFixture {
  std::vector<Vector> means;
  std::vector<SymMatrix> covs;
  std::vector<double> priors;
  Matrix complement_seed;  // R, (p - q) x p

  // derived by make_fixture
  Matrix u;          // p x q reduced-SVD basis of the population M
  Matrix proj;       // P_U = U U^T
  Matrix proj_perp;  // I - P_U
  Matrix c;          // R (I - U U^T)

  Eigen::Index p() const { return u.rows(); }
  Eigen::Index q() const { return u.cols(); }
};

/// Derives U, the projectors and C. Throws TheoremInapplicable when the
/// population M has full row rank, InvalidInput on inconsistent shapes.
TheoremFixture make_fixture(std::vector<Vector> means, std::vector<SymMatrix> covs,
                            std::vector<double> priors, Matrix complement_seed);

struct InvarianceResult {
  int argmin_full = 0;
  int argmin_reduced = 0;
  /// Smallest gap between the best and second-best full-space score fell
  /// below the tie tolerance.
  bool tie = false;
};

InvarianceResult theorem_invariance_check(const TheoremFixture& fix,
                                          const Vector& x,
                                          double tie_tol = 1e-12);

struct LemmaResiduals {
  // each entry is max over classes i = 2..k of a relative residual
  double mean_in_span = 0.0;          // ||P_U(g_i - g_1) - (g_i - g_1)||
  double cov_diff_perp = 0.0;         // ||P_U^perp (H_i - H_1)||
  double projector_commutes = 0.0;    // ||P_U H_i - H_i P_U||
  double reduced_inverse = 0.0;       // ||(U^T H_i U)^-1 - U^T H_i^-1 U||
  double complement_mean = 0.0;       // ||C g_i - C g_1||
  double complement_cov = 0.0;        // ||C H_i C^T - C H_1 C^T||

  double max() const;
};

LemmaResiduals lemma_suite(const TheoremFixture& fix);

}  // namespace ssdr
