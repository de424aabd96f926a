#include "ssdr/qda.hpp"

#include "ssdr/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace ssdr {

namespace {

QdaClass make_class(int id, double prior, const Vector& mean,
                    const SymMatrix& precision) {
  if (!(prior > 0.0)) {
    throw InvalidParameter("QDA: prior of class " + std::to_string(id) +
                           " must be > 0");
  }
  QdaClass c;
  c.class_id = id;
  c.prior = prior;
  c.mean = mean;
  c.precision = precision;
  c.precision_chol = cholesky_lower(precision);
  c.logdet_cov = -2.0 * c.precision_chol.diagonal().array().log().sum();
  return c;
}

void check_priors(const std::vector<QdaClass>& classes) {
  double total = 0.0;
  for (const auto& c : classes) total += c.prior;
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidParameter("QDA: priors sum to " + std::to_string(total) +
                           ", expected 1");
  }
}

}  // namespace

QdaModel::QdaModel(Eigen::Index p, std::vector<QdaClass> classes)
    : p_(p), classes_(std::move(classes)) {
  if (classes_.empty()) throw InvalidInput("QDA: model needs at least one class");
  for (const auto& c : classes_) {
    if (c.mean.size() != p_ || c.precision.dim() != p_) {
      throw InvalidInput("QDA: class parameter dimension mismatch");
    }
  }
  check_priors(classes_);
}

QdaModel fit(const std::vector<ClassSummary>& summaries,
             const PrecisionEstimatorSpec& spec) {
  std::vector<SymMatrix> precisions;
  precisions.reserve(summaries.size());
  for (const auto& cs : summaries) {
    try {
      precisions.push_back(estimate(cs, spec).omega);
    } catch (const Error& e) {
      throw ClassEstimationError(cs.class_id, "class " +
                                                  std::to_string(cs.class_id) +
                                                  ": " + e.what());
    }
  }
  return fit(summaries, precisions);
}

QdaModel fit(const std::vector<ClassSummary>& summaries,
             const std::vector<SymMatrix>& precisions) {
  if (summaries.empty()) throw InvalidInput("QDA: no class summaries");
  if (precisions.size() != summaries.size()) {
    throw InvalidInput("QDA: one precision per class is required");
  }
  std::vector<QdaClass> classes;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    try {
      classes.push_back(make_class(summaries[i].class_id, summaries[i].prior,
                                   summaries[i].mean, precisions[i]));
    } catch (const NotSpd& e) {
      throw ClassEstimationError(summaries[i].class_id,
                                 "class " + std::to_string(summaries[i].class_id) +
                                     ": " + e.what());
    }
  }
  return QdaModel(summaries.front().mean.size(), std::move(classes));
}

QdaModel fit_exact(const std::vector<Vector>& means,
                   const std::vector<SymMatrix>& covs,
                   const std::vector<double>& priors) {
  if (means.empty() || means.size() != covs.size() ||
      means.size() != priors.size()) {
    throw InvalidInput("QDA: means, covariances and priors must align");
  }
  std::vector<QdaClass> classes;
  for (std::size_t i = 0; i < means.size(); ++i) {
    classes.push_back(make_class(static_cast<int>(i), priors[i], means[i],
                                 spd_logdet_and_inverse(covs[i]).inverse));
  }
  return QdaModel(means.front().size(), std::move(classes));
}

Matrix scores(const QdaModel& model, const Matrix& x) {
  if (x.cols() != model.p()) {
    throw InvalidInput("QDA: observation dimension " + std::to_string(x.cols()) +
                       " != model dimension " + std::to_string(model.p()));
  }
  Matrix out(x.rows(), model.k());
  for (int i = 0; i < model.k(); ++i) {
    const QdaClass& c = model.classes()[static_cast<std::size_t>(i)];
    // (x - mu)^T L L^T (x - mu) = ||L^T (x - mu)||^2
    const Matrix centered = x.rowwise() - c.mean.transpose();
    const Matrix t = centered * c.precision_chol;
    out.col(i) = t.rowwise().squaredNorm().array() + c.logdet_cov -
                 2.0 * std::log(c.prior);
  }
  return out;
}

Vector scores(const QdaModel& model, const Vector& x) {
  return scores(model, Matrix(x.transpose())).row(0).transpose();
}

std::vector<int> classify(const QdaModel& model, const Matrix& x) {
  const Matrix d = scores(model, x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < d.cols(); ++j) {
      if (d(r, j) < d(r, best)) best = j;
    }
    out[static_cast<std::size_t>(r)] =
        model.classes()[static_cast<std::size_t>(best)].class_id;
  }
  return out;
}

int classify(const QdaModel& model, const Vector& x) {
  return classify(model, Matrix(x.transpose())).front();
}

double conditional_error_rate(const QdaModel& model, const LabeledDataset& test) {
  if (test.n() == 0) throw InvalidInput("conditional_error_rate: empty test set");
  const std::vector<int> predicted = classify(model, test.features());
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] != test.labels()[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(predicted.size());
}

}  // namespace ssdr
