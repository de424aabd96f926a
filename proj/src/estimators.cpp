#include "ssdr/estimators.hpp"

#include "ssdr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

namespace ssdr {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::SampleInverse: return "sample";
    case EstimatorKind::Haff: return "haff";
    case EstimatorKind::Wang: return "wang";
    case EstimatorKind::Bodnar: return "bodnar";
    case EstimatorKind::Mry: return "mry";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "sample" || name == "sample_inverse") return EstimatorKind::SampleInverse;
  if (name == "haff") return EstimatorKind::Haff;
  if (name == "wang") return EstimatorKind::Wang;
  if (name == "bodnar") return EstimatorKind::Bodnar;
  if (name == "mry") return EstimatorKind::Mry;
  throw InvalidParameter("unknown estimator '" + std::string(name) +
                         "' (expected sample, haff, wang, bodnar or mry)");
}

void PrecisionEstimatorSpec::validate() const {
  if (kind == EstimatorKind::Mry) {
    if (!(mry.lambda > 0.0)) throw InvalidParameter("MRY lambda must be > 0");
    if (mry.penalty == MryPenalty::QdaRecommended && !(mry.gamma > 0.0)) {
      throw InvalidParameter("MRY gamma must be > 0");
    }
    if (!(mry.admm.rho > 0.0) || !(mry.admm.tolerance > 0.0) ||
        mry.admm.max_iterations < 1) {
      throw InvalidParameter("invalid ADMM options");
    }
  }
  if (wang_grid_size < 2) throw InvalidParameter("wang_grid_size must be >= 2");
  if (!(spd_repair_eps > 0.0)) throw InvalidParameter("spd_repair_eps must be > 0");
  if (bodnar_target.kind == BodnarTargetKind::Explicit && !bodnar_target.matrix) {
    throw InvalidParameter("explicit Bodnar target requires a matrix");
  }
}

namespace {

double mean_quadratic(const ClassSummary& cs, const SymMatrix& omega) {
  return cs.mean.dot(omega.mat() * cs.mean);
}

Matrix inverse_of(const SymMatrix& s) { return spd_logdet_and_inverse(s).inverse.mat(); }

// Solves rho * W - W^{-1} = K for SPD W (closed form through eigenvectors of K).
Matrix logdet_prox(const Matrix& k, double rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (k + k.transpose()));
  const Vector& e = es.eigenvalues();
  Vector w(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    w(i) = (e(i) + std::sqrt(e(i) * e(i) + 4.0 * rho)) / (2.0 * rho);
  }
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

// Entrywise soft-threshold of the off-diagonal entries; the diagonal passes.
Matrix soft_threshold_offdiag(const Matrix& y, double t) {
  Matrix z = y;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      if (i == j) continue;
      const double v = y(i, j);
      z(i, j) = v > t ? v - t : (v < -t ? v + t : 0.0);
    }
  }
  return z;
}

double simple_kkt_residual(const Matrix& s, const Matrix& omega, double lambda) {
  const Matrix g = s - inverse_of(SymMatrix(omega));
  double worst = 0.0;
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      double r = 0.0;
      if (i == j) {
        r = std::abs(g(i, j));
      } else if (omega(i, j) != 0.0) {
        r = std::abs(g(i, j) + lambda * (omega(i, j) > 0.0 ? 1.0 : -1.0));
      } else {
        r = std::max(0.0, std::abs(g(i, j)) - lambda);
      }
      worst = std::max(worst, r);
    }
  }
  return worst;
}

void check_mry_input(const ClassSummary& cs, const MryParams& params) {
  if (!(params.lambda > 0.0)) throw InvalidParameter("MRY lambda must be > 0");
  if (params.penalty == MryPenalty::QdaRecommended && !(params.gamma > 0.0)) {
    throw InvalidParameter("MRY gamma must be > 0");
  }
  if ((cs.cov.mat().diagonal().array() <= 0.0).any()) {
    throw NumericalDomainError(
        "MRY: sample covariance has a non-positive diagonal entry");
  }
}

Matrix initial_omega(const ClassSummary& cs, const SymMatrix* warm_start) {
  if (warm_start != nullptr && warm_start->dim() == cs.cov.dim()) {
    return warm_start->mat();
  }
  return Matrix(cs.cov.mat().diagonal().cwiseInverse().asDiagonal());
}

PrecisionEstimate mry_simple(const ClassSummary& cs, const MryParams& params,
                             const SymMatrix* warm_start) {
  const Matrix& s = cs.cov.mat();
  // Exact screening: with every |S_ij| <= lambda the diagonal inverse meets
  // the optimality conditions, so no iterations are needed.
  const Matrix off = s - Matrix(s.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() <= params.lambda) {
    const SymMatrix d(Matrix(s.diagonal().cwiseInverse().asDiagonal()));
    PrecisionEstimate out{d, {}};
    out.diagnostics.kkt_residual = simple_kkt_residual(s, d.mat(), params.lambda);
    return out;
  }
  const AdmmOptions& opt = params.admm;
  double rho = opt.rho;
  Matrix omega = initial_omega(cs, warm_start);
  Matrix z = omega;
  Matrix u = Matrix::Zero(s.rows(), s.cols());  // scaled dual
  double primal = std::numeric_limits<double>::infinity();
  double dual = primal;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    omega = logdet_prox(rho * (z - u) - s, rho);
    const Matrix z_old = z;
    z = soft_threshold_offdiag(omega + u, params.lambda / rho);
    u += omega - z;
    primal = (omega - z).norm() / std::max({1.0, omega.norm(), z.norm()});
    dual = rho * (z - z_old).norm() / std::max(1.0, rho * u.norm());
    if (primal < opt.tolerance && dual < opt.tolerance) break;
    if (primal > opt.balance_ratio * dual) {
      rho *= 2.0;
      u /= 2.0;
    } else if (dual > opt.balance_ratio * primal) {
      rho /= 2.0;
      u *= 2.0;
    }
  }
  if (it == opt.max_iterations) {
    throw ConvergenceError(it, primal, dual,
                           "MRY ADMM did not converge in " + std::to_string(it) +
                               " iterations (primal " + std::to_string(primal) +
                               ", dual " + std::to_string(dual) + ")");
  }
  // Z carries the exact sparsity pattern; fall back to the SPD iterate when
  // Z is not positive definite.
  SymMatrix zs(z);
  SymMatrix result = min_eigenvalue(zs) > 0.0 ? zs : SymMatrix(omega);
  PrecisionEstimate out{result, {}};
  out.diagnostics.iterations = it + 1;
  out.diagnostics.kkt_residual = simple_kkt_residual(s, result.mat(), params.lambda);
  return out;
}

// B = [x | g I]. Both sandwiches cost O(p^2) instead of a dense product.
Matrix b_outer(const Vector& x, double g, const Matrix& v) {  // B V B^T
  const Eigen::Index p = x.size();
  const Vector c = v.col(0).tail(p);
  Matrix out = (g * g) * v.bottomRightCorner(p, p);
  out.noalias() += v(0, 0) * x * x.transpose();
  out.noalias() += g * x * c.transpose();
  out.noalias() += g * c * x.transpose();
  return out;
}

Matrix b_inner(const Vector& x, double g, const Matrix& w) {  // B^T W B
  const Eigen::Index p = x.size();
  const Vector wx = w * x;
  Matrix out(p + 1, p + 1);
  out(0, 0) = x.dot(wx);
  out.col(0).tail(p) = g * wx;
  out.row(0).tail(p) = g * wx.transpose();
  out.bottomRightCorner(p, p) = (g * g) * w;
  return out;
}

// Congruence by a I + c h h^T with unit h.
struct RankOneCongruence {
  double a = 1.0;
  double c = 0.0;
  Vector h;

  Matrix apply(const Matrix& m) const {
    if (c == 0.0) return (a * a) * m;
    const Vector mh = m * h;
    const double q = h.dot(mh);
    Matrix out = (a * a) * m;
    out.noalias() += (a * c) * h * mh.transpose();
    out.noalias() += (a * c) * mh * h.transpose();
    out.noalias() += (c * c * q) * h * h.transpose();
    return out;
  }
};

PrecisionEstimate mry_qda(const ClassSummary& cs, const MryParams& params,
                          const SymMatrix* warm_start) {
  const Matrix& s = cs.cov.mat();
  const Eigen::Index p = s.rows();
  const double gamma = params.gamma;
  Vector xbar = cs.mean;
  if (params.standardize_mean && xbar.norm() > 0.0) xbar /= xbar.norm();

  // The Omega-subproblem
  //   min tr(S W) - log|W| + rho/2 ||B^T W B - V||^2
  // has stationarity S - W^-1 + rho (G W G - B V B^T) = 0 with G = B B^T
  // = gamma^2 I + xbar xbar^T. Writing W = G^-1/2 P G^-1/2 turns it into the
  // plain log-det prox in P.
  RankOneCongruence g_inv_half;
  g_inv_half.a = 1.0 / gamma;
  const double xn2 = xbar.squaredNorm();
  if (xn2 > 0.0) {
    g_inv_half.h = xbar / std::sqrt(xn2);
    g_inv_half.c = 1.0 / std::sqrt(gamma * gamma + xn2) - 1.0 / gamma;
  }
  const Matrix s_tilde = g_inv_half.apply(s);

  const AdmmOptions& opt = params.admm;
  double rho = opt.rho;
  Matrix omega = initial_omega(cs, warm_start);
  Matrix bob = b_inner(xbar, gamma, omega);
  Matrix z = bob;
  Matrix u = Matrix::Zero(p + 1, p + 1);
  double primal = std::numeric_limits<double>::infinity();
  double dual = primal;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Matrix psi = logdet_prox(
        rho * g_inv_half.apply(b_outer(xbar, gamma, z - u)) - s_tilde, rho);
    omega = g_inv_half.apply(psi);
    bob = b_inner(xbar, gamma, omega);
    const Matrix z_old = z;
    z = soft_threshold_offdiag(bob + u, params.lambda / rho);
    u += bob - z;
    primal = (bob - z).norm() / std::max({1.0, bob.norm(), z.norm()});
    dual = rho * b_outer(xbar, gamma, z - z_old).norm() /
           std::max(1.0, rho * b_outer(xbar, gamma, u).norm());
    if (primal < opt.tolerance && dual < opt.tolerance) break;
    if (primal > opt.balance_ratio * dual) {
      rho *= 2.0;
      u /= 2.0;
    } else if (dual > opt.balance_ratio * primal) {
      rho /= 2.0;
      u *= 2.0;
    }
  }
  if (it == opt.max_iterations) {
    throw ConvergenceError(it, primal, dual,
                           "MRY ADMM (QDA penalty) did not converge in " +
                               std::to_string(it) + " iterations (primal " +
                               std::to_string(primal) + ", dual " +
                               std::to_string(dual) + ")");
  }
  SymMatrix result(omega);
  PrecisionEstimate out{result, {}};
  out.diagnostics.iterations = it + 1;
  // dual certificate: Lambda = rho * U is a valid subgradient by construction
  // of the soft-threshold step, so stationarity is what remains to check.
  const Matrix stationarity =
      s - inverse_of(result) + rho * b_outer(xbar, gamma, u);
  out.diagnostics.kkt_residual =
      std::max(stationarity.cwiseAbs().maxCoeff(), primal);
  return out;
}

}  // namespace

bool repair_spd(SymMatrix& m, double eps) {
  const SymEigen e = sym_eigen(m);
  const double floor = eps * e.values.cwiseAbs().maxCoeff();
  if (e.values.minCoeff() >= floor && e.values.minCoeff() > 0.0) return false;
  Vector clipped = e.values.cwiseMax(floor > 0.0 ? floor : eps);
  m = SymMatrix(e.vectors * clipped.asDiagonal() * e.vectors.transpose());
  return true;
}

PrecisionEstimate sample_inverse(const ClassSummary& cs) {
  PrecisionEstimate out{spd_logdet_and_inverse(cs.cov).inverse, {}};
  out.diagnostics.mean_quadratic = mean_quadratic(cs, out.omega);
  return out;
}

PrecisionEstimate haff(const ClassSummary& cs) {
  const double p = static_cast<double>(cs.cov.dim());
  const double n = static_cast<double>(cs.n);
  if (!(n > p + 2.0)) {
    throw SampleSizeError("Haff estimator needs n_i > p + 2 (n_i = " +
                          std::to_string(cs.n) + ", p = " +
                          std::to_string(cs.cov.dim()) + ")");
  }
  const LogdetInverse li = spd_logdet_and_inverse(cs.cov);
  const double trace = cs.cov.mat().trace();
  const double u = p * std::exp(li.logdet / p) / trace;
  const double t =
      std::min(4.0 * (p * p - 1.0) / ((n - p - 2.0) * p * p), 1.0) *
      std::pow(u, 1.0 / p);
  const auto dim = cs.cov.dim();
  Matrix omega = (1.0 - t) * (n - p - 2.0) * li.inverse.mat() +
                 (t * (p * n - p - 2.0) / trace) * Matrix::Identity(dim, dim);
  PrecisionEstimate out{SymMatrix(omega), {}};
  out.diagnostics.shrinkage_coefficients = {t, u};
  out.diagnostics.mean_quadratic = mean_quadratic(cs, out.omega);
  return out;
}

WangLoss wang_loss(const Vector& eigenvalues_of_s, std::size_t n, double beta) {
  const double p = static_cast<double>(eigenvalues_of_s.size());
  // (S/beta + I)^{-1} has eigenvalues beta / (l + beta)
  const Vector m = (beta / (eigenvalues_of_s.array() + beta)).matrix();
  const double tr1 = m.sum() / p;
  const double tr2 = m.squaredNorm() / p;
  const double a1 = 1.0 - tr1;
  const double a2 = tr1 - tr2;
  const double d = 1.0 - (p / static_cast<double>(n)) * a1;
  if (!(d > 0.0)) {
    throw NumericalDomainError("Wang loss: denominator 1 - (p/n) a1(beta) <= 0 at beta = " +
                               std::to_string(beta));
  }
  WangLoss out;
  out.r1 = a1 / d;
  out.r2 = a1 / (d * d * d) - a2 / (d * d * d * d);
  if (!(out.r2 > 0.0)) {
    throw NumericalDomainError("Wang loss: R2(beta) <= 0 at beta = " +
                               std::to_string(beta));
  }
  out.loss = 1.0 - out.r1 * out.r1 / out.r2;
  return out;
}

PrecisionEstimate wang(const ClassSummary& cs, int grid_size) {
  if (grid_size < 2) throw InvalidParameter("wang_grid_size must be >= 2");
  const auto p = cs.cov.dim();
  if (!(cs.n > static_cast<std::size_t>(p))) {
    throw SampleSizeError("Wang estimator needs n_i > p");
  }
  const SymEigen e = sym_eigen(cs.cov);
  const double lmax = e.values(0);
  const double lmin = e.values(p - 1);
  if (!(lmin > 0.0)) {
    throw NotSpd(static_cast<std::size_t>(p - 1),
                 "Wang estimator: sample covariance is not positive definite");
  }
  auto loss = [&](double beta) { return wang_loss(e.values, cs.n, beta).loss; };

  std::vector<double> grid;
  if (lmax - lmin <= 1e-12 * lmax) {
    grid.push_back(lmin);
  } else {
    const double step = std::log(lmax / lmin) / (grid_size - 1);
    for (int i = 0; i < grid_size; ++i) grid.push_back(lmin * std::exp(step * i));
    grid.back() = lmax;
  }
  std::size_t best = 0;
  double best_loss = loss(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double l = loss(grid[i]);
    if (l < best_loss) {  // strict: keeps the smallest beta among ties
      best_loss = l;
      best = i;
    }
  }
  double beta = grid[best];
  if (grid.size() > 2) {
    // golden-section refinement on the bracketing grid cell pair
    double lo = grid[best == 0 ? 0 : best - 1];
    double hi = grid[std::min(best + 1, grid.size() - 1)];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    double f1 = loss(x1);
    double f2 = loss(x2);
    for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = loss(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = loss(x2);
      }
    }
    const double cand = f1 <= f2 ? x1 : x2;
    if (loss(cand) < best_loss) beta = cand;
  }
  const WangLoss at = wang_loss(e.values, cs.n, beta);
  const double alpha = at.r1 / at.r2;
  // alpha (S + beta I)^{-1} through the eigenbasis of S
  const Vector d = (alpha / (e.values.array() + beta)).matrix();
  Matrix omega = e.vectors * d.asDiagonal() * e.vectors.transpose();
  PrecisionEstimate out{SymMatrix(omega), {}};
  out.diagnostics.shrinkage_coefficients = {alpha, beta};
  out.diagnostics.mean_quadratic = mean_quadratic(cs, out.omega);
  return out;
}

PrecisionEstimate bodnar(const ClassSummary& cs, const BodnarTarget& target,
                         double spd_repair_eps) {
  const auto dim = cs.cov.dim();
  const double p = static_cast<double>(dim);
  const double n = static_cast<double>(cs.n);
  if (!(n > p)) throw SampleSizeError("Bodnar estimator needs n_i > p");
  const Matrix s_inv = spd_logdet_and_inverse(cs.cov).inverse.mat();

  Matrix omega0;
  switch (target.kind) {
    case BodnarTargetKind::Identity: omega0 = Matrix::Identity(dim, dim); break;
    case BodnarTargetKind::DiagonalOfS:
      omega0 = Matrix(cs.cov.mat().diagonal().asDiagonal());
      break;
    case BodnarTargetKind::Explicit:
      if (!target.matrix || target.matrix->dim() != dim) {
        throw InvalidParameter("Bodnar: explicit target has wrong dimension");
      }
      omega0 = target.matrix->mat();
      break;
  }

  // S^{-1} is SPD, so its trace norm is its trace
  const double trace_norm_sinv = s_inv.trace();
  const double fro2_sinv = s_inv.squaredNorm();
  const double fro2_t = omega0.squaredNorm();
  const double cross = (s_inv * omega0).trace();
  const double denom = fro2_sinv * fro2_t - cross * cross;
  if (!(denom > 1e-12 * fro2_sinv * fro2_t)) {
    throw DegeneracyError(
        "Bodnar estimator: S^-1 is proportional to the target, shrinkage "
        "denominator vanishes; use the sample inverse instead");
  }
  const double alpha =
      1.0 - p / n - (1.0 / n) * trace_norm_sinv * trace_norm_sinv * fro2_t / denom;
  const double beta = cross / fro2_t * (1.0 - p / n - alpha);
  SymMatrix omega(alpha * s_inv + beta * omega0);
  PrecisionEstimate out{omega, {}};
  out.diagnostics.shrinkage_coefficients = {alpha, beta};
  out.diagnostics.target_trace_norm =
      sym_eigen(SymMatrix(omega0)).values.cwiseAbs().sum();
  out.diagnostics.repaired = repair_spd(out.omega, spd_repair_eps);
  out.diagnostics.mean_quadratic = mean_quadratic(cs, out.omega);
  return out;
}

PrecisionEstimate mry(const ClassSummary& cs, const MryParams& params,
                      const SymMatrix* warm_start) {
  check_mry_input(cs, params);
  PrecisionEstimate out = params.penalty == MryPenalty::Simple
                              ? mry_simple(cs, params, warm_start)
                              : mry_qda(cs, params, warm_start);
  out.diagnostics.mean_quadratic = mean_quadratic(cs, out.omega);
  return out;
}

PrecisionEstimate estimate(const ClassSummary& cs,
                           const PrecisionEstimatorSpec& spec,
                           const SymMatrix* warm_start) {
  spec.validate();
  PrecisionEstimate out;
  switch (spec.kind) {
    case EstimatorKind::SampleInverse: out = sample_inverse(cs); break;
    case EstimatorKind::Haff: out = haff(cs); break;
    case EstimatorKind::Wang: out = wang(cs, spec.wang_grid_size); break;
    case EstimatorKind::Bodnar:
      out = bodnar(cs, spec.bodnar_target, spec.spd_repair_eps);
      break;
    case EstimatorKind::Mry: out = mry(cs, spec.mry, warm_start); break;
  }
  if (!out.omega.mat().allFinite() || !(min_eigenvalue(out.omega) > 0.0)) {
    throw NumericalDomainError(std::string(to_string(spec.kind)) +
                               " estimate is not positive definite");
  }
  return out;
}

}  // namespace ssdr
