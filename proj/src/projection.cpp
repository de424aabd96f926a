#include "ssdr/projection.hpp"

#include "ssdr/errors.hpp"
#include "ssdr/qda.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace ssdr {

namespace {

void check_summaries(const std::vector<ClassSummary>& summaries) {
  if (summaries.size() < 2) {
    throw InvalidInput("M-hat needs at least two classes");
  }
  const auto p = summaries.front().mean.size();
  for (const auto& cs : summaries) {
    if (cs.mean.size() != p || cs.cov.dim() != p) {
      throw InvalidInput("M-hat: class summaries disagree on dimension");
    }
  }
}

// Order of summaries by class id; the first entry is the reference class.
std::vector<std::size_t> by_class_id(const std::vector<ClassSummary>& summaries) {
  std::vector<std::size_t> order(summaries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return summaries[a].class_id < summaries[b].class_id;
  });
  return order;
}

Matrix assemble(const std::vector<Vector>& weighted_means,
                const std::vector<const Matrix*>& covs) {
  const std::size_t k = weighted_means.size();
  const Eigen::Index p = weighted_means.front().size();
  Matrix m(p, static_cast<Eigen::Index>(k - 1) * (p + 1));
  Eigen::Index col = 0;
  for (std::size_t i = 1; i < k; ++i) {
    m.col(col++) = weighted_means[i] - weighted_means[0];
  }
  for (std::size_t i = 1; i < k; ++i) {
    m.middleCols(col, p) = *covs[i] - *covs[0];
    col += p;
  }
  return m;
}

}  // namespace

Matrix build_mhat(const std::vector<ClassSummary>& summaries,
                  const PrecisionEstimatorSpec& spec) {
  check_summaries(summaries);
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
  return build_mhat(summaries, precisions);
}

Matrix build_mhat(const std::vector<ClassSummary>& summaries,
                  const std::vector<SymMatrix>& precisions) {
  check_summaries(summaries);
  if (precisions.size() != summaries.size()) {
    throw InvalidInput("M-hat: one precision per class is required");
  }
  std::vector<Vector> weighted;
  std::vector<const Matrix*> covs;
  for (std::size_t i : by_class_id(summaries)) {
    if (precisions[i].dim() != summaries[i].mean.size()) {
      throw InvalidInput("M-hat: precision dimension mismatch");
    }
    weighted.push_back(precisions[i].mat() * summaries[i].mean);
    covs.push_back(&summaries[i].cov.mat());
  }
  return assemble(weighted, covs);
}

Matrix build_population_m(const std::vector<Vector>& means,
                          const std::vector<SymMatrix>& covs) {
  if (means.size() < 2 || means.size() != covs.size()) {
    throw InvalidInput("population M needs k >= 2 aligned means and covariances");
  }
  std::vector<Vector> weighted;
  std::vector<const Matrix*> cov_ptrs;
  for (std::size_t i = 0; i < means.size(); ++i) {
    weighted.push_back(spd_logdet_and_inverse(covs[i]).inverse.mat() * means[i]);
    cov_ptrs.push_back(&covs[i].mat());
  }
  return assemble(weighted, cov_ptrs);
}

ProjectionBasis projection_basis(const Matrix& mhat, Eigen::Index r,
                                 double rank_tol) {
  if (r < 1 || r > mhat.rows()) {
    throw InvalidParameter("projection dimension r = " + std::to_string(r) +
                           " outside 1.." + std::to_string(mhat.rows()));
  }
  ProjectionBasis b;
  b.p = mhat.rows();
  b.r = r;
  b.u = left_singular_basis(mhat, r, &b.singular_values);
  const double top = b.singular_values.size() > 0 ? b.singular_values(0) : 0.0;
  Eigen::Index q = 0;
  while (q < b.singular_values.size() && top > 0.0 &&
         b.singular_values(q) > rank_tol * top) {
    ++q;
  }
  b.numerical_rank = q;
  b.beyond_rank = r > q;
  return b;
}

LabeledDataset project(const ProjectionBasis& basis, const LabeledDataset& ds) {
  if (ds.p() != basis.p) {
    throw InvalidInput("project: dataset has p = " + std::to_string(ds.p()) +
                       ", basis expects " + std::to_string(basis.p));
  }
  return ds.with_features(ds.features() * basis.u);
}

TheoremFixture make_fixture(std::vector<Vector> means, std::vector<SymMatrix> covs,
                            std::vector<double> priors, Matrix complement_seed) {
  TheoremFixture f;
  f.means = std::move(means);
  f.covs = std::move(covs);
  f.priors = std::move(priors);
  f.complement_seed = std::move(complement_seed);
  if (f.priors.size() != f.means.size()) {
    throw InvalidInput("fixture: one prior per class is required");
  }
  const Matrix m = build_population_m(f.means, f.covs);
  const ReducedSvd svd = reduced_svd(m);
  const Eigen::Index p = m.rows();
  if (svd.rank >= p) {
    throw TheoremInapplicable("population M has full rank " +
                              std::to_string(p) +
                              "; the invariance theorem needs rank(M) < p");
  }
  f.u = svd.u;
  f.proj = f.u * f.u.transpose();
  f.proj_perp = Matrix::Identity(p, p) - f.proj;
  if (f.complement_seed.rows() != p - svd.rank || f.complement_seed.cols() != p) {
    throw InvalidInput("fixture: R must be (p - q) x p = " +
                       std::to_string(p - svd.rank) + "x" + std::to_string(p));
  }
  f.c = f.complement_seed * f.proj_perp;
  if (f.c.rows() > 0 && reduced_svd(f.c).rank != f.c.rows()) {
    throw InvalidInput("fixture: C = R (I - U U^T) must have rank p - q");
  }
  return f;
}

InvarianceResult theorem_invariance_check(const TheoremFixture& fix,
                                          const Vector& x, double tie_tol) {
  if (fix.u.cols() >= fix.u.rows()) {
    throw TheoremInapplicable("fixture has rank(M) = p");
  }
  const QdaModel full = fit_exact(fix.means, fix.covs, fix.priors);
  std::vector<Vector> reduced_means;
  std::vector<SymMatrix> reduced_covs;
  for (std::size_t i = 0; i < fix.means.size(); ++i) {
    reduced_means.push_back(fix.u.transpose() * fix.means[i]);
    reduced_covs.emplace_back(fix.u.transpose() * fix.covs[i].mat() * fix.u);
  }
  const QdaModel reduced = fit_exact(reduced_means, reduced_covs, fix.priors);

  auto best_and_gap = [](const Vector& d) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < d.size(); ++j) {
      if (d(j) < d(best)) best = j;
    }
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      if (j != best) gap = std::min(gap, d(j) - d(best));
    }
    return std::pair{static_cast<int>(best), gap};
  };
  const auto [full_best, full_gap] = best_and_gap(scores(full, x));
  const auto [red_best, red_gap] =
      best_and_gap(scores(reduced, Vector(fix.u.transpose() * x)));
  InvarianceResult out;
  out.argmin_full = full_best;
  out.argmin_reduced = red_best;
  out.tie = full_gap < tie_tol || red_gap < tie_tol;
  return out;
}

double LemmaResiduals::max() const {
  return std::max({mean_in_span, cov_diff_perp, projector_commutes,
                   reduced_inverse, complement_mean, complement_cov});
}

LemmaResiduals lemma_suite(const TheoremFixture& fix) {
  LemmaResiduals out;
  const std::size_t k = fix.means.size();
  std::vector<Vector> g(k);
  for (std::size_t i = 0; i < k; ++i) {
    g[i] = spd_logdet_and_inverse(fix.covs[i]).inverse.mat() * fix.means[i];
  }
  auto rel = [](double residual, std::initializer_list<double> scales) {
    double s = 1.0;
    for (double v : scales) s = std::max(s, v);
    return residual / s;
  };
  const Matrix& h1 = fix.covs[0].mat();
  for (std::size_t i = 0; i < k; ++i) {
    const Matrix& hi = fix.covs[i].mat();
    // commutation is stated for every class including the reference
    out.projector_commutes = std::max(
        out.projector_commutes,
        rel((fix.proj * hi - hi * fix.proj).norm(), {hi.norm()}));
    const Matrix reduced = fix.u.transpose() * hi * fix.u;
    const Matrix lhs = spd_logdet_and_inverse(SymMatrix(reduced)).inverse.mat();
    const Matrix rhs = fix.u.transpose() *
                       spd_logdet_and_inverse(fix.covs[i]).inverse.mat() * fix.u;
    out.reduced_inverse = std::max(
        out.reduced_inverse, rel((lhs - rhs).norm(), {lhs.norm(), rhs.norm()}));
    if (i == 0) continue;
    const Vector dg = g[i] - g[0];
    const Matrix dh = hi - h1;
    out.mean_in_span = std::max(
        out.mean_in_span, rel((fix.proj * dg - dg).norm(), {dg.norm()}));
    out.cov_diff_perp = std::max(
        out.cov_diff_perp, rel((fix.proj_perp * dh).norm(), {dh.norm()}));
    out.complement_mean = std::max(
        out.complement_mean,
        rel((fix.c * g[i] - fix.c * g[0]).norm(),
            {fix.c.norm() * g[i].norm(), fix.c.norm() * g[0].norm()}));
    const Matrix ci = fix.c * hi * fix.c.transpose();
    const Matrix c1 = fix.c * h1 * fix.c.transpose();
    out.complement_cov = std::max(
        out.complement_cov, rel((ci - c1).norm(), {ci.norm(), c1.norm()}));
  }
  return out;
}

}  // namespace ssdr
