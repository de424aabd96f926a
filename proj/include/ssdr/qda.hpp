#pragma once

#include "ssdr/dataset.hpp"
#include "ssdr/estimators.hpp"
#include "ssdr/numerics.hpp"

#include <vector>

namespace ssdr {

struct QdaClass {
  int class_id = 0;
  double prior = 0.0;
  Vector mean;
  SymMatrix precision;
  double logdet_cov = 0.0;  // log|Sigma_i| = -log|precision|
  Matrix precision_chol;    // lower factor L with precision = L L^T
};

/// Quadratic discriminant model; immutable after fit.
class QdaModel {
public:
  QdaModel() = default;
  QdaModel(Eigen::Index p, std::vector<QdaClass> classes);

  Eigen::Index p() const noexcept { return p_; }
  int k() const noexcept { return static_cast<int>(classes_.size()); }
  const std::vector<QdaClass>& classes() const noexcept { return classes_; }

private:
  Eigen::Index p_ = 0;
  std::vector<QdaClass> classes_;
};

/// Fits with the estimator in `spec` (SampleInverse gives classical QDA).
QdaModel fit(const std::vector<ClassSummary>& summaries,
             const PrecisionEstimatorSpec& spec = {});

/// Fits with precisions supplied by the caller (one per summary).
QdaModel fit(const std::vector<ClassSummary>& summaries,
             const std::vector<SymMatrix>& precisions);

/// Population mode: exact means, covariances and priors.
QdaModel fit_exact(const std::vector<Vector>& means,
                   const std::vector<SymMatrix>& covs,
                   const std::vector<double>& priors);

/// d_i(x) = log|Sigma_i| - 2 log(pi_i) + (x - mu_i)^T Sigma_i^-1 (x - mu_i).
Vector scores(const QdaModel& model, const Vector& x);

/// Scores for every row of x (n x k).
Matrix scores(const QdaModel& model, const Matrix& x);

/// argmin of the scores; ties go to the lowest class id.
int classify(const QdaModel& model, const Vector& x);
std::vector<int> classify(const QdaModel& model, const Matrix& x);

/// Fraction of misclassified rows of `test`.
double conditional_error_rate(const QdaModel& model, const LabeledDataset& test);

}  // namespace ssdr
