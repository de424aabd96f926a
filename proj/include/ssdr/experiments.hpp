#pragma once

#include "ssdr/dataset.hpp"
#include "ssdr/estimators.hpp"
#include "ssdr/numerics.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ssdr {

// ---------------------------------------------------------------------------
// Sampling

/// n draws of mean + L z with L the Cholesky factor of cov; rows are draws.
Matrix mvn_sample(const Vector& mean, const SymMatrix& cov, Eigen::Index n,
                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Pipelines

struct LambdaGridPolicy {
  int points = 10;
  double c_lo = 1e-3;
  double c_hi = 1.0;
  /// When non-empty, used verbatim instead of the eigenvalue-informed grid.
  std::vector<double> explicit_grid;
};

/// SSDR projection followed by QDA, swept over reduced dimensions.
struct PipelineSpec {
  std::string name;
  PrecisionEstimatorSpec estimator;
  /// Reduced dimensions to evaluate; empty means 1..p.
  std::vector<int> dimensions;
  /// MRY only: choose lambda per dimension by validation error. When false the
  /// lambda in estimator.mry is used as is.
  bool tune_lambda = true;
  LambdaGridPolicy lambda_grid;
  /// Folds of the inner split used to tune lambda on real data.
  int inner_folds = 5;

  void validate() const;
};

/// Pipeline with the common defaults for a given estimator.
PipelineSpec default_pipeline(EstimatorKind kind);

/// Eigenvalue-informed geometric lambda grid, ascending.
std::vector<double> lambda_grid(const std::vector<ClassSummary>& summaries,
                                const LambdaGridPolicy& policy);

struct LambdaTuning {
  std::vector<double> grid;            // ascending
  std::vector<int> dimensions;
  Matrix validation_cer;               // grid x dimensions, NaN on failure
  std::vector<double> best_per_dimension;
  double best = 0.0;                   // lambda at the best (lambda, r) cell
  int best_dimension = 0;
};

/// Held-out validation mode: fit on `train`, score on `validation`.
LambdaTuning tune_lambda(const LabeledDataset& train,
                         const LabeledDataset& validation,
                         const PipelineSpec& pipeline,
                         const std::vector<int>& dimensions);

/// Inner cross-validation mode on `train` only.
LambdaTuning tune_lambda_cv(const LabeledDataset& train,
                            const PipelineSpec& pipeline,
                            const std::vector<int>& dimensions,
                            std::uint64_t seed);

/// Error rates of the pipeline at each requested dimension; a failed fit
/// leaves std::nullopt in its slot.
struct PipelineOutcome {
  std::vector<std::optional<double>> rates;
  std::vector<double> lambdas;  // MRY: lambda used per dimension
  std::string error;            // last failure message, if any
};

PipelineOutcome evaluate_pipeline(const PipelineSpec& pipeline,
                                  const LabeledDataset& train,
                                  const LabeledDataset& test,
                                  const std::vector<int>& dimensions,
                                  const LabeledDataset* validation,
                                  std::uint64_t tuning_seed);

/// Error rate of classical full-feature QDA (sample precisions).
double full_qda_error(const LabeledDataset& train, const LabeledDataset& test);

// ---------------------------------------------------------------------------
// Reports

struct RateSummary {
  double median = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
  std::size_t missing = 0;
};

RateSummary summarize_rates(const std::vector<std::optional<double>>& rates);

/// Error rates for one (method, setting, dimension) across replicates/repeats.
struct CerCell {
  std::string method;
  std::string setting;   // "n=p+1", dataset name, ...
  int n_i = 0;           // class training size (simulation), 0 otherwise
  int dimension = 0;
  bool full_feature = false;
  std::vector<std::optional<double>> rates;

  RateSummary summary() const { return summarize_rates(rates); }
};

struct CerReport {
  std::vector<CerCell> cells;
  std::map<std::string, std::string> metadata;
  std::size_t failures = 0;

  const CerCell* find(const std::string& method, const std::string& setting,
                      int dimension) const;
};

struct DimensionChoice {
  int r_star = 0;
  double cer = 0.0;
};

/// argmin over dimensions of the median rate; ties go to the smaller r.
DimensionChoice select_dimension(const CerReport& report,
                                 const std::string& method,
                                 const std::string& setting);

/// Same rule over a flat list of (dimension, median) pairs.
DimensionChoice select_dimension(const std::vector<std::pair<int, double>>& medians);

// ---------------------------------------------------------------------------
// Monte Carlo study

enum class TrainingSize { PPlus1, TwoP, SixP };

std::string to_string(TrainingSize size);
TrainingSize parse_training_size(const std::string& text);
std::size_t resolve_training_size(TrainingSize size, Eigen::Index p);

struct SimulationConfig {
  int config_id = 1;
  Eigen::Index p = 0;
  std::vector<Vector> means;
  std::vector<SymMatrix> covs;
  std::size_t pool_size = 5000;
  std::vector<TrainingSize> training_sizes{TrainingSize::PPlus1,
                                           TrainingSize::TwoP,
                                           TrainingSize::SixP};
  int replicates = 200;
  std::uint64_t seed = 0;
  /// Independent validation draw per class used for lambda tuning.
  std::size_t validation_size = 500;

  int k() const { return static_cast<int>(means.size()); }
};

/// Parameters of configurations 1-4. Configuration 4 draws mu_2 ~ U(0,1)^50
/// once from the master seed.
SimulationConfig make_simulation_config(int config_id, std::uint64_t seed,
                                        int replicates = 200);

struct StudyOptions {
  int threads = 1;
  bool include_full_qda = true;
  /// Also score the exact-parameter QDA rule on every test set.
  bool include_exact_qda = false;
};

CerReport run_mc_study(const SimulationConfig& cfg,
                       const std::vector<PipelineSpec>& pipelines,
                       const StudyOptions& options = {});

// ---------------------------------------------------------------------------
// Repeated stratified k-fold cross-validation

/// Fold id per row; class proportions are preserved across folds.
std::vector<int> stratified_folds(const std::vector<int>& labels, int k_classes,
                                  int folds, std::uint64_t seed);

struct CvOptions {
  int folds = 10;
  int repeats = 50;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string dataset = "data";
  bool standardize = false;
  /// Applied once to the whole dataset before any split.
  std::optional<double> jitter_sigma;
  bool include_full_qda = true;
};

CerReport repeated_kfold_cv(const LabeledDataset& ds,
                            const std::vector<PipelineSpec>& pipelines,
                            const CvOptions& options);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions are
/// rethrown after all workers finish.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

/// Thread count from SSDR_THREADS, else hardware concurrency.
int default_thread_count();

}  // namespace ssdr
