#include "ssdr/experiments.hpp"

#include "ssdr/errors.hpp"
#include "ssdr/projection.hpp"
#include "ssdr/qda.hpp"
#include "ssdr/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace ssdr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags keep the sub-streams of one work unit apart.
enum : std::uint64_t {
  kTagPool = 1,
  kTagShuffle = 2,
  kTagValidation = 3,
  kTagConfigParams = 4,
  kTagFolds = 5,
  kTagInnerFolds = 6,
  kTagJitter = 7,
};

std::vector<int> resolve_dimensions(const std::vector<int>& dims, Eigen::Index p) {
  std::vector<int> out = dims;
  if (out.empty()) {
    out.resize(static_cast<std::size_t>(p));
    std::iota(out.begin(), out.end(), 1);
  }
  for (int r : out) {
    if (r < 1 || r > p) {
      throw InvalidParameter("dimension " + std::to_string(r) + " outside 1.." +
                             std::to_string(p));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double error_rate(const std::vector<int>& predicted, const std::vector<int>& truth) {
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] != truth[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(predicted.size());
}

// Error rate of reduced-space QDA for each dimension. The reduced class
// moments are U^T xbar and U^T S U, which equal the moments of the projected
// training rows, so the training data never needs to be projected.
std::vector<std::optional<double>> rates_over_dimensions(
    const std::vector<ClassSummary>& summaries,
    const std::vector<SymMatrix>& precisions, const LabeledDataset& test,
    const std::vector<int>& dims) {
  std::vector<std::optional<double>> out(dims.size());
  const Eigen::Index p = summaries.front().mean.size();
  const Matrix mhat = build_mhat(summaries, precisions);
  const Matrix u = left_singular_basis(mhat, p, nullptr);
  const Matrix z = test.features() * u;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    const Eigen::Index r = dims[j];
    const auto ur = u.leftCols(r);
    std::vector<ClassSummary> reduced;
    reduced.reserve(summaries.size());
    for (const auto& cs : summaries) {
      ClassSummary rc;
      rc.class_id = cs.class_id;
      rc.n = cs.n;
      rc.prior = cs.prior;
      rc.mean = ur.transpose() * cs.mean;
      rc.cov = SymMatrix(ur.transpose() * cs.cov.mat() * ur);
      reduced.push_back(std::move(rc));
    }
    try {
      const QdaModel model = fit(reduced);
      out[j] = error_rate(classify(model, Matrix(z.leftCols(r))), test.labels());
    } catch (const Error&) {
      out[j] = std::nullopt;
    }
  }
  return out;
}

std::vector<SymMatrix> estimate_all(const std::vector<ClassSummary>& summaries,
                                    const PrecisionEstimatorSpec& spec,
                                    const std::vector<SymMatrix>* warm) {
  std::vector<SymMatrix> out;
  out.reserve(summaries.size());
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const SymMatrix* w = warm != nullptr && i < warm->size() ? &(*warm)[i] : nullptr;
    try {
      out.push_back(estimate(summaries[i], spec, w).omega);
    } catch (const Error& e) {
      throw ClassEstimationError(summaries[i].class_id,
                                 "class " + std::to_string(summaries[i].class_id) +
                                     ": " + e.what());
    }
  }
  return out;
}

// MRY precisions for every grid point, visited from the largest lambda down
// so each solve warm-starts from a sparser neighbour. Failed points are empty.
std::vector<std::optional<std::vector<SymMatrix>>> mry_path(
    const std::vector<ClassSummary>& summaries, const PipelineSpec& pipeline,
    const std::vector<double>& grid, std::string* last_error) {
  std::vector<std::optional<std::vector<SymMatrix>>> out(grid.size());
  std::optional<std::vector<SymMatrix>> warm;
  PrecisionEstimatorSpec spec = pipeline.estimator;
  for (std::size_t g = grid.size(); g-- > 0;) {
    spec.mry.lambda = grid[g];
    try {
      out[g] = estimate_all(summaries, spec, warm ? &*warm : nullptr);
      warm = out[g];
    } catch (const Error& e) {
      if (last_error != nullptr) *last_error = e.what();
    }
  }
  return out;
}

void choose_lambdas(LambdaTuning& t) {
  const auto ng = static_cast<Eigen::Index>(t.grid.size());
  const auto nd = static_cast<Eigen::Index>(t.dimensions.size());
  t.best_per_dimension.assign(t.dimensions.size(), kNaN);
  double best_cer = std::numeric_limits<double>::infinity();
  for (Eigen::Index d = 0; d < nd; ++d) {
    double dim_best = std::numeric_limits<double>::infinity();
    // ascending grid with <= : ties resolve to the larger lambda
    for (Eigen::Index g = 0; g < ng; ++g) {
      const double v = t.validation_cer(g, d);
      if (std::isnan(v)) continue;
      if (v <= dim_best) {
        dim_best = v;
        t.best_per_dimension[static_cast<std::size_t>(d)] = t.grid[static_cast<std::size_t>(g)];
      }
    }
    if (dim_best < best_cer) {
      best_cer = dim_best;
      t.best = t.best_per_dimension[static_cast<std::size_t>(d)];
      t.best_dimension = t.dimensions[static_cast<std::size_t>(d)];
    }
  }
  if (!std::isfinite(best_cer)) {
    throw TuningError("lambda tuning: the estimator failed at every grid point");
  }
}

std::vector<double> grid_for(const std::vector<ClassSummary>& summaries,
                             const PipelineSpec& pipeline) {
  return lambda_grid(summaries, pipeline.lambda_grid);
}

void require_mry(const PipelineSpec& pipeline) {
  if (pipeline.estimator.kind != EstimatorKind::Mry) {
    throw InvalidParameter("lambda tuning applies to the MRY estimator only");
  }
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Fits the whole lambda path once and scores every point on `validation`;
// the path is handed back so the caller can reuse the chosen fits.
LambdaTuning tune_on_validation(const std::vector<ClassSummary>& summaries,
                                const LabeledDataset& validation,
                                const PipelineSpec& pipeline,
                                const std::vector<int>& dims,
                                std::vector<std::optional<std::vector<SymMatrix>>>& path) {
  LambdaTuning t;
  t.grid = grid_for(summaries, pipeline);
  t.dimensions = dims;
  t.validation_cer = Matrix::Constant(static_cast<Eigen::Index>(t.grid.size()),
                                      static_cast<Eigen::Index>(dims.size()), kNaN);
  path = mry_path(summaries, pipeline, t.grid, nullptr);
  for (std::size_t g = 0; g < t.grid.size(); ++g) {
    if (!path[g]) continue;
    const auto rates = rates_over_dimensions(summaries, *path[g], validation, dims);
    for (std::size_t d = 0; d < rates.size(); ++d) {
      if (rates[d]) {
        t.validation_cer(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(d)) = *rates[d];
      }
    }
  }
  choose_lambdas(t);
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------

Matrix mvn_sample(const Vector& mean, const SymMatrix& cov, Eigen::Index n,
                  std::uint64_t seed) {
  if (mean.size() != cov.dim()) {
    throw InvalidInput("mvn_sample: mean and covariance dimensions differ");
  }
  if (n < 0) throw InvalidParameter("mvn_sample: n must be >= 0");
  const Matrix l = cholesky_lower(cov);
  const Eigen::Index p = mean.size();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = normal(rng);
  }
  Matrix x = z * l.transpose();
  x.rowwise() += mean.transpose();
  return x;
}

void PipelineSpec::validate() const {
  estimator.validate();
  for (int r : dimensions) {
    if (r < 1) throw InvalidParameter("pipeline dimensions must be >= 1");
  }
  if (estimator.kind == EstimatorKind::Mry && tune_lambda) {
    if (lambda_grid.explicit_grid.empty()) {
      if (lambda_grid.points < 1) throw InvalidParameter("lambda grid needs >= 1 point");
      if (!(lambda_grid.c_lo > 0.0) || !(lambda_grid.c_hi > 0.0)) {
        throw InvalidParameter("lambda grid constants must be > 0");
      }
    }
    for (double v : lambda_grid.explicit_grid) {
      if (!(v > 0.0)) throw InvalidParameter("lambda grid values must be > 0");
    }
    if (inner_folds < 2) throw InvalidParameter("inner_folds must be >= 2");
  }
}

PipelineSpec default_pipeline(EstimatorKind kind) {
  PipelineSpec p;
  p.estimator.kind = kind;
  p.name = "SSDR_" + std::string(to_string(kind));
  return p;
}

std::vector<double> lambda_grid(const std::vector<ClassSummary>& summaries,
                                const LambdaGridPolicy& policy) {
  if (!policy.explicit_grid.empty()) {
    std::vector<double> g = policy.explicit_grid;
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  }
  if (summaries.empty()) throw InvalidInput("lambda grid: no class summaries");
  // Eigenvalues of the (pseudo-)inverse of S_i are 1 / (nonzero eigenvalues of S_i).
  double e_min = std::numeric_limits<double>::infinity();
  double e_max = 0.0;
  for (const auto& cs : summaries) {
    const Vector ev = sym_eigen(cs.cov).values;  // descending
    const double top = ev(0);
    if (!(top > 0.0)) continue;
    e_min = std::min(e_min, 1.0 / top);
    for (Eigen::Index j = ev.size(); j-- > 0;) {
      if (ev(j) > 1e-12 * top) {
        e_max = std::max(e_max, 1.0 / ev(j));
        break;
      }
    }
  }
  if (!std::isfinite(e_min) || !(e_max > 0.0)) {
    throw InvalidInput("lambda grid: every class covariance is zero");
  }
  const double lo = policy.c_lo * e_min;
  const double hi = policy.c_hi * e_max;
  std::vector<double> g(static_cast<std::size_t>(policy.points));
  if (policy.points == 1) {
    g[0] = std::sqrt(lo * hi);
    return g;
  }
  const double step = std::log(hi / lo) / (policy.points - 1);
  for (int i = 0; i < policy.points; ++i) g[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  g.back() = hi;
  return g;
}

LambdaTuning tune_lambda(const LabeledDataset& train,
                         const LabeledDataset& validation,
                         const PipelineSpec& pipeline,
                         const std::vector<int>& dimensions) {
  require_mry(pipeline);
  const auto summaries = summarize(train);
  std::vector<std::optional<std::vector<SymMatrix>>> path;
  return tune_on_validation(summaries, validation, pipeline,
                            resolve_dimensions(dimensions, train.p()), path);
}

LambdaTuning tune_lambda_cv(const LabeledDataset& train,
                            const PipelineSpec& pipeline,
                            const std::vector<int>& dimensions,
                            std::uint64_t seed) {
  require_mry(pipeline);
  LambdaTuning t;
  t.grid = grid_for(summarize(train), pipeline);
  t.dimensions = resolve_dimensions(dimensions, train.p());
  const auto ng = static_cast<Eigen::Index>(t.grid.size());
  const auto nd = static_cast<Eigen::Index>(t.dimensions.size());
  Matrix sum = Matrix::Zero(ng, nd);
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(ng, nd);
  const std::vector<int> fold =
      stratified_folds(train.labels(), train.k(), pipeline.inner_folds, seed);
  for (int f = 0; f < pipeline.inner_folds; ++f) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? va : tr).push_back(i);
    std::vector<ClassSummary> summaries;
    try {
      summaries = summarize(train.subset(tr));
    } catch (const Error&) {
      continue;
    }
    const LabeledDataset val = train.subset(va);
    const auto path = mry_path(summaries, pipeline, t.grid, nullptr);
    for (Eigen::Index g = 0; g < ng; ++g) {
      if (!path[static_cast<std::size_t>(g)]) continue;
      const auto rates = rates_over_dimensions(summaries, *path[static_cast<std::size_t>(g)],
                                               val, t.dimensions);
      for (Eigen::Index d = 0; d < nd; ++d) {
        if (const auto& v = rates[static_cast<std::size_t>(d)]) {
          sum(g, d) += *v;
          count(g, d) += 1;
        }
      }
    }
  }
  // A (lambda, r) cell counts only if every inner fold produced a rate.
  t.validation_cer = Matrix::Constant(ng, nd, kNaN);
  for (Eigen::Index g = 0; g < ng; ++g) {
    for (Eigen::Index d = 0; d < nd; ++d) {
      if (count(g, d) == pipeline.inner_folds) {
        t.validation_cer(g, d) = sum(g, d) / pipeline.inner_folds;
      }
    }
  }
  choose_lambdas(t);
  return t;
}

PipelineOutcome evaluate_pipeline(const PipelineSpec& pipeline,
                                  const LabeledDataset& train,
                                  const LabeledDataset& test,
                                  const std::vector<int>& dimensions,
                                  const LabeledDataset* validation,
                                  std::uint64_t tuning_seed) {
  PipelineOutcome out;
  const std::vector<int> dims = resolve_dimensions(dimensions, train.p());
  out.rates.assign(dims.size(), std::nullopt);
  out.lambdas.assign(dims.size(), kNaN);
  std::vector<ClassSummary> summaries;
  try {
    summaries = summarize(train);
  } catch (const Error& e) {
    out.error = e.what();
    return out;
  }

  const bool tuned = pipeline.estimator.kind == EstimatorKind::Mry && pipeline.tune_lambda;
  if (!tuned) {
    try {
      const auto precisions = estimate_all(summaries, pipeline.estimator, nullptr);
      out.rates = rates_over_dimensions(summaries, precisions, test, dims);
      if (pipeline.estimator.kind == EstimatorKind::Mry) {
        out.lambdas.assign(dims.size(), pipeline.estimator.mry.lambda);
      }
    } catch (const Error& e) {
      out.error = e.what();
    }
    return out;
  }

  LambdaTuning t;
  std::vector<std::optional<std::vector<SymMatrix>>> path;
  try {
    if (validation != nullptr) {
      t = tune_on_validation(summaries, *validation, pipeline, dims, path);
    } else {
      t = tune_lambda_cv(train, pipeline, dims, tuning_seed);
    }
  } catch (const Error& e) {
    out.error = e.what();
    return out;
  }
  std::vector<double> chosen = t.best_per_dimension;
  chosen.erase(std::remove_if(chosen.begin(), chosen.end(),
                              [](double v) { return std::isnan(v); }),
               chosen.end());
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  std::vector<std::optional<std::vector<SymMatrix>>> fits;
  if (validation != nullptr) {
    // held-out mode tuned on this very training fit
    for (double lam : chosen) {
      const auto it = std::find(t.grid.begin(), t.grid.end(), lam);
      fits.push_back(path[static_cast<std::size_t>(it - t.grid.begin())]);
    }
  } else {
    fits = mry_path(summaries, pipeline, chosen, &out.error);
  }
  for (std::size_t c = 0; c < chosen.size(); ++c) {
    if (!fits[c]) continue;
    std::vector<int> sub;
    std::vector<std::size_t> where;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      if (t.best_per_dimension[d] == chosen[c]) {
        sub.push_back(dims[d]);
        where.push_back(d);
      }
    }
    const auto rates = rates_over_dimensions(summaries, *fits[c], test, sub);
    for (std::size_t j = 0; j < where.size(); ++j) {
      out.rates[where[j]] = rates[j];
      out.lambdas[where[j]] = chosen[c];
    }
  }
  return out;
}

double full_qda_error(const LabeledDataset& train, const LabeledDataset& test) {
  return conditional_error_rate(fit(summarize(train)), test);
}

// ---------------------------------------------------------------------------

RateSummary summarize_rates(const std::vector<std::optional<double>>& rates) {
  RateSummary s;
  std::vector<double> v;
  for (const auto& r : rates) {
    if (r) {
      v.push_back(*r);
    } else {
      ++s.missing;
    }
  }
  s.count = v.size();
  if (v.empty()) {
    s.median = s.mean = s.sd = kNaN;
    return s;
  }
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  s.median = median_of(std::move(v));
  return s;
}

const CerCell* CerReport::find(const std::string& method, const std::string& setting,
                               int dimension) const {
  for (const auto& c : cells) {
    if (c.method == method && c.setting == setting && c.dimension == dimension) return &c;
  }
  return nullptr;
}

DimensionChoice select_dimension(const std::vector<std::pair<int, double>>& medians) {
  std::vector<std::pair<int, double>> v;
  for (const auto& m : medians) {
    if (!std::isnan(m.second)) v.push_back(m);
  }
  if (v.empty()) throw InvalidInput("select_dimension: no dimension has a rate");
  std::sort(v.begin(), v.end());
  DimensionChoice best{v.front().first, v.front().second};
  for (const auto& [r, cer] : v) {
    if (cer < best.cer) best = {r, cer};
  }
  return best;
}

DimensionChoice select_dimension(const CerReport& report, const std::string& method,
                                 const std::string& setting) {
  std::vector<std::pair<int, double>> medians;
  for (const auto& c : report.cells) {
    if (c.method == method && c.setting == setting) {
      medians.emplace_back(c.dimension, c.summary().median);
    }
  }
  if (medians.empty()) {
    throw InvalidInput("select_dimension: report has no cells for " + method + " / " +
                       setting);
  }
  return select_dimension(medians);
}

// ---------------------------------------------------------------------------

std::string to_string(TrainingSize size) {
  switch (size) {
    case TrainingSize::PPlus1: return "p+1";
    case TrainingSize::TwoP: return "2p";
    case TrainingSize::SixP: return "6p";
  }
  return "?";
}

TrainingSize parse_training_size(const std::string& text) {
  if (text == "p+1") return TrainingSize::PPlus1;
  if (text == "2p") return TrainingSize::TwoP;
  if (text == "6p") return TrainingSize::SixP;
  throw InvalidParameter("unknown training size '" + text + "' (expected p+1, 2p or 6p)");
}

std::size_t resolve_training_size(TrainingSize size, Eigen::Index p) {
  const auto pp = static_cast<std::size_t>(p);
  switch (size) {
    case TrainingSize::PPlus1: return pp + 1;
    case TrainingSize::TwoP: return 2 * pp;
    case TrainingSize::SixP: return 6 * pp;
  }
  return 0;
}

SimulationConfig make_simulation_config(int config_id, std::uint64_t seed,
                                        int replicates) {
  if (replicates < 1) throw InvalidParameter("replicates must be >= 1");
  SimulationConfig cfg;
  cfg.config_id = config_id;
  cfg.seed = seed;
  cfg.replicates = replicates;
  const auto ones = [](Eigen::Index p) { return Matrix::Ones(p, p); };
  switch (config_id) {
    case 1: {
      cfg.p = 10;
      cfg.means = {Vector::Zero(10), Vector::Ones(10)};
      cfg.covs = {SymMatrix::identity(10), SymMatrix::identity(10)};
      break;
    }
    case 2: {
      cfg.p = 10;
      Vector mu1(10);
      mu1 << -1.43, -0.66, -0.94, 0.31, -0.19, 0.89, 0.25, -0.34, 1.25, -1.60;
      Matrix s3 = ones(10) + Matrix::Identity(10, 10);
      s3.row(2).setZero();
      s3.col(2).setZero();
      s3(2, 2) = 10.0;
      cfg.means = {mu1, mu1 + Vector::Ones(10), mu1 + 2.0 * Vector::Ones(10)};
      cfg.covs = {SymMatrix::identity(10),
                  SymMatrix(Matrix(Matrix::Identity(10, 10) + ones(10))),
                  SymMatrix(s3)};
      break;
    }
    case 3: {
      cfg.p = 10;
      Matrix s(10, 10);
      s << 10, 4, 5, 4, 3, 4, 4, 5, 4, 3,
           4, 10, 5, 2, 4, 3, 3, 5, 4, 3,
           5, 5, 10, 5, 5, 3, 4, 4, 4, 4,
           4, 2, 5, 10, 3, 4, 2, 3, 4, 3,
           3, 4, 5, 3, 12, 3, 4, 5, 3, 3,
           4, 3, 3, 4, 3, 9, 3, 4, 4, 4,
           4, 3, 4, 2, 4, 3, 14, 2, 2, 2,
           5, 5, 4, 3, 5, 4, 2, 12, 1, -0.5,
           4, 4, 4, 4, 3, 4, 2, 1, 14, -1,
           3, 3, 4, 3, 3, 4, 2, -0.5, -1, 11;
      cfg.means = {Vector::Zero(10), Vector::Constant(10, 5.0),
                   Vector::Constant(10, 10.0)};
      cfg.covs = {SymMatrix(s), SymMatrix(s), SymMatrix::identity(10)};
      break;
    }
    case 4: {
      cfg.p = 50;
      Rng rng = make_rng(seed, {kTagConfigParams});
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      Vector mu2(50);
      for (Eigen::Index j = 0; j < 50; ++j) mu2(j) = unif(rng);
      cfg.means = {Vector::Zero(50), mu2};
      cfg.covs = {SymMatrix::identity(50),
                  SymMatrix(Matrix(Matrix::Identity(50, 50) + 2.0 * ones(50)))};
      break;
    }
    default:
      throw InvalidParameter("unknown config_id " + std::to_string(config_id) +
                             " (expected 1, 2, 3 or 4)");
  }
  for (const auto& c : cfg.covs) cholesky_lower(c);  // all SPD
  return cfg;
}

namespace {

std::string join(const Vector& v) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v(i);
  return os.str();
}

bool needs_validation(const std::vector<PipelineSpec>& pipelines) {
  return std::any_of(pipelines.begin(), pipelines.end(), [](const PipelineSpec& p) {
    return p.estimator.kind == EstimatorKind::Mry && p.tune_lambda;
  });
}

struct UnitResult {
  std::vector<PipelineOutcome> pipelines;
  std::optional<double> full;
  std::optional<double> exact;
};

}  // namespace

CerReport run_mc_study(const SimulationConfig& cfg,
                       const std::vector<PipelineSpec>& pipelines,
                       const StudyOptions& options) {
  if (cfg.means.size() < 2 || cfg.means.size() != cfg.covs.size()) {
    throw InvalidInput("simulation config needs k >= 2 aligned means and covariances");
  }
  if (cfg.replicates < 1) throw InvalidParameter("replicates must be >= 1");
  if (cfg.training_sizes.empty()) throw InvalidParameter("no training sizes given");
  std::vector<std::vector<int>> dims;
  for (const auto& pl : pipelines) {
    pl.validate();
    dims.push_back(resolve_dimensions(pl.dimensions, cfg.p));
  }
  for (TrainingSize ts : cfg.training_sizes) {
    if (resolve_training_size(ts, cfg.p) >= cfg.pool_size) {
      throw InvalidParameter("training size " + to_string(ts) +
                             " leaves no test rows in a pool of " +
                             std::to_string(cfg.pool_size));
    }
  }
  const int k = cfg.k();
  const bool validate_draw = needs_validation(pipelines);
  std::vector<double> priors(static_cast<std::size_t>(k), 1.0 / k);
  const std::size_t n_sizes = cfg.training_sizes.size();
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<UnitResult> results(n_sizes * reps);

  parallel_for(results.size(), options.threads, [&](std::size_t unit) {
    const std::size_t s = unit / reps;
    const std::size_t b = unit % reps;
    const std::size_t n_i = resolve_training_size(cfg.training_sizes[s], cfg.p);
    const auto test_n = static_cast<Eigen::Index>(cfg.pool_size - n_i);
    Matrix xtr(static_cast<Eigen::Index>(n_i) * k, cfg.p);
    Matrix xte(test_n * k, cfg.p);
    Matrix xva(validate_draw ? static_cast<Eigen::Index>(cfg.validation_size) * k : 0, cfg.p);
    std::vector<int> ytr, yte, yva;
    for (int i = 0; i < k; ++i) {
      const auto ci = static_cast<std::size_t>(i);
      const Matrix pool = mvn_sample(cfg.means[ci], cfg.covs[ci],
                                     static_cast<Eigen::Index>(cfg.pool_size),
                                     derive_seed(cfg.seed, {kTagPool, s, b, ci}));
      std::vector<Eigen::Index> order(cfg.pool_size);
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      Rng shuffle_rng = make_rng(cfg.seed, {kTagShuffle, s, b, ci});
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t j = 0; j < cfg.pool_size; ++j) {
        if (j < n_i) {
          xtr.row(static_cast<Eigen::Index>(ytr.size())) = pool.row(order[j]);
          ytr.push_back(i);
        } else {
          xte.row(static_cast<Eigen::Index>(yte.size())) = pool.row(order[j]);
          yte.push_back(i);
        }
      }
      if (validate_draw) {
        const auto nv = static_cast<Eigen::Index>(cfg.validation_size);
        xva.middleRows(i * nv, nv) =
            mvn_sample(cfg.means[ci], cfg.covs[ci], nv,
                       derive_seed(cfg.seed, {kTagValidation, s, b, ci}));
        yva.insert(yva.end(), cfg.validation_size, i);
      }
    }
    const LabeledDataset train(std::move(xtr), std::move(ytr));
    const LabeledDataset test(std::move(xte), std::move(yte));
    std::optional<LabeledDataset> val;
    if (validate_draw) val.emplace(std::move(xva), std::move(yva));

    UnitResult& res = results[unit];
    for (std::size_t j = 0; j < pipelines.size(); ++j) {
      res.pipelines.push_back(evaluate_pipeline(pipelines[j], train, test, dims[j],
                                                val ? &*val : nullptr, 0));
    }
    if (options.include_full_qda) {
      try {
        res.full = full_qda_error(train, test);
      } catch (const Error&) {
      }
    }
    if (options.include_exact_qda) {
      res.exact = conditional_error_rate(fit_exact(cfg.means, cfg.covs, priors), test);
    }
  });

  CerReport report;
  for (std::size_t s = 0; s < n_sizes; ++s) {
    const std::string setting = "n=" + to_string(cfg.training_sizes[s]);
    const int n_i = static_cast<int>(resolve_training_size(cfg.training_sizes[s], cfg.p));
    auto slice = [&](auto get) {
      std::vector<std::optional<double>> rates(reps);
      for (std::size_t b = 0; b < reps; ++b) rates[b] = get(results[s * reps + b]);
      return rates;
    };
    if (options.include_full_qda) {
      report.cells.push_back({"QDA", setting, n_i, static_cast<int>(cfg.p), true,
                              slice([](const UnitResult& u) { return u.full; })});
    }
    if (options.include_exact_qda) {
      report.cells.push_back({"QDA_exact", setting, n_i, static_cast<int>(cfg.p), true,
                              slice([](const UnitResult& u) { return u.exact; })});
    }
    for (std::size_t j = 0; j < pipelines.size(); ++j) {
      for (std::size_t d = 0; d < dims[j].size(); ++d) {
        report.cells.push_back(
            {pipelines[j].name, setting, n_i, dims[j][d], false,
             slice([&](const UnitResult& u) { return u.pipelines[j].rates[d]; })});
      }
    }
  }
  for (const auto& c : report.cells) report.failures += c.summary().missing;

  report.metadata["kind"] = "simulation";
  report.metadata["config_id"] = std::to_string(cfg.config_id);
  report.metadata["p"] = std::to_string(cfg.p);
  report.metadata["k"] = std::to_string(k);
  report.metadata["pool_size"] = std::to_string(cfg.pool_size);
  report.metadata["replicates"] = std::to_string(cfg.replicates);
  report.metadata["seed"] = std::to_string(cfg.seed);
  report.metadata["validation_size"] = std::to_string(cfg.validation_size);
  for (int i = 0; i < k; ++i) {
    report.metadata["mu_" + std::to_string(i + 1)] = join(cfg.means[static_cast<std::size_t>(i)]);
  }
  return report;
}

// ---------------------------------------------------------------------------

std::vector<int> stratified_folds(const std::vector<int>& labels, int k_classes,
                                  int folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidParameter("folds must be >= 2");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(k_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= k_classes) throw InvalidInput("stratified_folds: label out of range");
    by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  std::vector<int> fold(labels.size(), -1);
  Rng rng(seed);
  int next = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.size() < static_cast<std::size_t>(folds)) {
      throw StratificationError("class " + std::to_string(c) + " has " +
                                std::to_string(rows.size()) + " rows, fewer than " +
                                std::to_string(folds) + " folds");
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    // continue the round-robin across classes so fold sizes stay balanced
    for (std::size_t row : rows) {
      fold[row] = next;
      next = (next + 1) % folds;
    }
  }
  return fold;
}

CerReport repeated_kfold_cv(const LabeledDataset& ds_in,
                            const std::vector<PipelineSpec>& pipelines,
                            const CvOptions& options) {
  if (options.repeats < 1) throw InvalidParameter("repeats must be >= 1");
  if (options.folds < 2) throw InvalidParameter("folds must be >= 2");
  std::vector<std::vector<int>> dims;
  for (const auto& pl : pipelines) {
    pl.validate();
    dims.push_back(resolve_dimensions(pl.dimensions, ds_in.p()));
  }
  const LabeledDataset ds =
      options.jitter_sigma
          ? jitter(ds_in, *options.jitter_sigma, derive_seed(options.seed, {kTagJitter}))
          : ds_in;

  const auto repeats = static_cast<std::size_t>(options.repeats);
  const auto folds = static_cast<std::size_t>(options.folds);
  // one task per (repeat, fold); fold assignments are drawn up front
  std::vector<std::vector<int>> fold_of(repeats);
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    fold_of[rep] = stratified_folds(ds.labels(), ds.k(), options.folds,
                                    derive_seed(options.seed, {kTagFolds, rep}));
  }
  struct FoldResult {
    std::vector<std::vector<std::optional<double>>> pipelines;
    std::optional<double> full;
  };
  std::vector<FoldResult> fold_results(repeats * folds);

  parallel_for(repeats * folds, options.threads, [&](std::size_t task) {
    const std::size_t rep = task / folds;
    const int f = static_cast<int>(task % folds);
    const std::vector<int>& fold = fold_of[rep];
    FoldResult& out = fold_results[task];
    out.pipelines.resize(pipelines.size());
    for (std::size_t j = 0; j < pipelines.size(); ++j) out.pipelines[j].resize(dims[j].size());

    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
    LabeledDataset train = ds.subset(tr);
    LabeledDataset test = ds.subset(te);
    if (options.standardize) {
      try {
        std::tie(train, test) = standardize(train, test);
      } catch (const Error&) {
        return;  // every cell of this repeat becomes missing
      }
    }
    const auto f64 = static_cast<std::uint64_t>(f);
    for (std::size_t j = 0; j < pipelines.size(); ++j) {
      out.pipelines[j] = evaluate_pipeline(pipelines[j], train, test, dims[j], nullptr,
                                           derive_seed(options.seed, {kTagInnerFolds, rep, f64, j}))
                             .rates;
    }
    if (options.include_full_qda) {
      try {
        out.full = full_qda_error(train, test);
      } catch (const Error&) {
      }
    }
  });

  // the mean over folds exists only when every fold produced a rate
  auto fold_mean = [&](std::size_t rep, auto&& get) -> std::optional<double> {
    double sum = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      const std::optional<double> r = get(fold_results[rep * folds + f]);
      if (!r) return std::nullopt;
      sum += *r;
    }
    return sum / static_cast<double>(folds);
  };

  CerReport report;
  const std::string& setting = options.dataset;
  if (options.include_full_qda) {
    std::vector<std::optional<double>> rates(repeats);
    for (std::size_t b = 0; b < repeats; ++b) {
      rates[b] = fold_mean(b, [](const FoldResult& r) { return r.full; });
    }
    report.cells.push_back({"QDA", setting, 0, static_cast<int>(ds.p()), true, rates});
  }
  for (std::size_t j = 0; j < pipelines.size(); ++j) {
    for (std::size_t d = 0; d < dims[j].size(); ++d) {
      std::vector<std::optional<double>> rates(repeats);
      for (std::size_t b = 0; b < repeats; ++b) {
        rates[b] = fold_mean(b, [&](const FoldResult& r) { return r.pipelines[j][d]; });
      }
      report.cells.push_back({pipelines[j].name, setting, 0, dims[j][d], false, rates});
    }
  }
  for (const auto& c : report.cells) report.failures += c.summary().missing;
  report.metadata["kind"] = "cv";
  report.metadata["dataset"] = options.dataset;
  report.metadata["n"] = std::to_string(ds.n());
  report.metadata["p"] = std::to_string(ds.p());
  report.metadata["k"] = std::to_string(ds.k());
  report.metadata["folds"] = std::to_string(options.folds);
  report.metadata["repeats"] = std::to_string(options.repeats);
  report.metadata["seed"] = std::to_string(options.seed);
  report.metadata["standardize"] = options.standardize ? "true" : "false";
  if (options.jitter_sigma) {
    std::ostringstream os;
    os.precision(17);
    os << *options.jitter_sigma;
    report.metadata["jitter_sigma"] = os.str();
    report.metadata["jitter_seed"] =
        std::to_string(derive_seed(options.seed, {kTagJitter}));
  } else {
    report.metadata["jitter_sigma"] = "none";
  }
  return report;
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int default_thread_count() {
  if (const char* env = std::getenv("SSDR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace ssdr
