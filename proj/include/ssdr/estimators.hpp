#pragma once

#include "ssdr/dataset.hpp"
#include "ssdr/numerics.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace ssdr {

enum class EstimatorKind { SampleInverse, Haff, Wang, Bodnar, Mry };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view name);

/// Penalty matrices for the MRY objective
///   tr(S W) - log|W| + lambda * |A W B - C|_1   (off-diagonal L1).
enum class MryPenalty {
  Simple,          // A = B = I, C = 0 (graphical lasso)
  QdaRecommended,  // C = 0, A^T = B = (xbar, gamma I)
};

struct AdmmOptions {
  double rho = 1.0;
  /// Bound on both residuals, each divided by max(1, scale of its iterates):
  /// absolute for unit-scale problems, relative for large precisions.
  double tolerance = 1e-6;
  int max_iterations = 10000;
  /// rho is doubled/halved when the primal/dual residual ratio exceeds this.
  double balance_ratio = 10.0;
};

struct MryParams {
  double lambda = 0.1;
  MryPenalty penalty = MryPenalty::Simple;
  double gamma = 1.0;
  bool standardize_mean = false;
  AdmmOptions admm;
};

enum class BodnarTargetKind { Identity, DiagonalOfS, Explicit };

struct BodnarTarget {
  BodnarTargetKind kind = BodnarTargetKind::Identity;
  std::optional<SymMatrix> matrix;  // Explicit only
};

struct PrecisionEstimatorSpec {
  EstimatorKind kind = EstimatorKind::SampleInverse;
  MryParams mry;
  BodnarTarget bodnar_target;
  int wang_grid_size = 1000;
  double spd_repair_eps = 1e-8;

  /// Throws InvalidParameter when a field violates its constraint.
  void validate() const;
};

struct EstimateDiagnostics {
  int iterations = 0;
  double kkt_residual = 0.0;
  /// Haff: {t(U), U}. Wang: {alpha, beta}. Bodnar: {alpha, beta}.
  std::vector<double> shrinkage_coefficients;
  bool repaired = false;
  /// xbar^T W xbar for the class mean; reported, never gated on.
  double mean_quadratic = 0.0;
  /// Bodnar only: trace norm of the target.
  double target_trace_norm = 0.0;
};

struct PrecisionEstimate {
  SymMatrix omega;
  EstimateDiagnostics diagnostics;
};

PrecisionEstimate sample_inverse(const ClassSummary& cs);
PrecisionEstimate haff(const ClassSummary& cs);
PrecisionEstimate wang(const ClassSummary& cs, int grid_size = 1000);
PrecisionEstimate bodnar(const ClassSummary& cs, const BodnarTarget& target = {},
                         double spd_repair_eps = 1e-8);
PrecisionEstimate mry(const ClassSummary& cs, const MryParams& params,
                      const SymMatrix* warm_start = nullptr);

/// Empirical loss L(beta) = 1 - R1^2 / R2 used by the Wang estimator, with
/// R1 and R2 exposed for callers that need alpha.
struct WangLoss {
  double r1 = 0.0;
  double r2 = 0.0;
  double loss = 0.0;
};
WangLoss wang_loss(const Vector& eigenvalues_of_s, std::size_t n, double beta);

/// Dispatches on spec.kind. The result is SPD or an Error is thrown.
PrecisionEstimate estimate(const ClassSummary& cs,
                           const PrecisionEstimatorSpec& spec,
                           const SymMatrix* warm_start = nullptr);

/// Eigenvalue clipping at eps * max|eigenvalue|. Returns true if changed.
bool repair_spd(SymMatrix& m, double eps);

}  // namespace ssdr
