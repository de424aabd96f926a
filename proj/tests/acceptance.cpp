// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//
// Environment:
//   SSDR_BRC_CSV, SSDR_PNG_CSV   prepared Breast Cancer / Penguins CSVs
//                                (tools/prepare_datasets.py); criterion 8
//                                reports SKIP for a missing file
//   SSDR_ACCEPT_REPLICATES       Monte Carlo replicates (default 200)
//   SSDR_ACCEPT_REPEATS          CV repeats for criterion 8 (default 50)
//   SSDR_THREADS                 worker threads
//   SSDR_ACCEPT_ONLY             comma list of criteria to run, e.g. "1,2,9"

#include "cli.hpp"
#include "ssdr/errors.hpp"
#include "ssdr/estimators.hpp"
#include "ssdr/experiments.hpp"
#include "ssdr/projection.hpp"
#include "ssdr/qda.hpp"
#include "support/fixtures.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>

using namespace ssdr;
using ssdr::testing::gaussian_classes;
using ssdr::testing::gaussian_matrix;
using ssdr::testing::glasso_kkt;
using ssdr::testing::invariant_fixture;
using ssdr::testing::random_cov;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
  return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)};
}

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  return std::max(1, std::atoi(v));
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const int kReplicates = env_int("SSDR_ACCEPT_REPLICATES", 200);
const int kRepeats = env_int("SSDR_ACCEPT_REPEATS", 50);
const int kThreads = default_thread_count();

ClassSummary summary_of(const Matrix& s, std::size_t n) {
  ClassSummary cs;
  cs.n = n;
  cs.cov = SymMatrix(s);
  cs.mean = Vector::Zero(s.rows());
  cs.prior = 1.0;
  return cs;
}

double median_of(const CerReport& rep, const std::string& method, const std::string& setting,
                 int dim) {
  const CerCell* c = rep.find(method, setting, dim);
  if (!c) return std::numeric_limits<double>::quiet_NaN();
  const RateSummary s = c->summary();
  return s.count ? s.median : std::numeric_limits<double>::quiet_NaN();
}

// --- 1 -------------------------------------------------------------------

Outcome theorem_reproduction() {
  Rng rng(1001);
  int fixtures = 0, ties = 0;
  long agreed = 0, points = 0;
  std::set<std::pair<int, Eigen::Index>> shapes;
  for (int f = 0; f < 24; ++f) {
    const int k = 2 + f % 2;
    const Eigen::Index p = 4 + f % 9;
    const Eigen::Index q = 1 + (f / 2) % std::min<Eigen::Index>(3, p - 1);
    const TheoremFixture fix = invariant_fixture({k, p, q}, rng);
    shapes.insert({k, p});
    ++fixtures;
    for (int t = 0; t < 10000; ++t) {
      const Vector x = fix.means[static_cast<std::size_t>(t) % fix.means.size()] +
                       2.0 * gaussian_matrix(p, 1, rng);
      const InvarianceResult r = theorem_invariance_check(fix, x, 1e-12);
      if (r.tie) {
        ++ties;
        continue;
      }
      ++points;
      if (r.argmin_full == r.argmin_reduced) ++agreed;
    }
  }
  std::ostringstream os;
  os << fixtures << " fixtures (" << shapes.size() << " (k,p) shapes), " << agreed << "/"
     << points << " non-tied points agree, " << ties << " ties";
  return pass_if(fixtures >= 20 && agreed == points, os.str());
}

// --- 2 -------------------------------------------------------------------

Outcome lemma_suite_check() {
  Rng rng(1002);
  double worst = 0.0;
  for (int f = 0; f < 100; ++f) {
    const int k = 2 + f % 2;
    const Eigen::Index p = 4 + f % 9;
    const Eigen::Index q = 1 + f % std::min<Eigen::Index>(3, p - 1);
    // invariant_fixture draws a fresh Gaussian R each time
    const TheoremFixture fix = invariant_fixture({k, p, q}, rng);
    worst = std::max(worst, lemma_suite(fix).max());
  }
  return pass_if(worst <= 1e-8, "100 fixtures, max relative residual " + fmt("%.3g", worst));
}

// --- 3 -------------------------------------------------------------------

Outcome estimator_oracles() {
  const Matrix i2 = Matrix::Identity(2, 2);
  const double haff_err =
      (haff(summary_of(i2, 10)).omega.mat() - 7.0 * i2).cwiseAbs().maxCoeff();
  const double wang_err =
      (wang(summary_of(i2, 10)).omega.mat() - 0.91125 * i2).cwiseAbs().maxCoeff();
  Matrix d12 = Matrix::Zero(2, 2);
  d12(0, 0) = 1.0;
  d12(1, 1) = 2.0;
  Matrix want = Matrix::Zero(2, 2);
  want(0, 0) = 0.35;
  want(1, 1) = 0.85;
  const double bod_err =
      (bodnar(summary_of(d12, 10)).omega.mat() - want).cwiseAbs().maxCoeff();
  bool degenerate = false;
  try {
    bodnar(summary_of(i2, 10));
  } catch (const DegeneracyError&) {
    degenerate = true;
  }
  std::ostringstream os;
  os << "haff " << fmt("%.2g", haff_err) << ", wang " << fmt("%.2g", wang_err) << ", bodnar "
     << fmt("%.2g", bod_err) << ", degeneracy " << (degenerate ? "raised" : "not raised");
  return pass_if(haff_err <= 1e-12 && wang_err <= 1e-9 && bod_err <= 1e-9 && degenerate,
                 os.str());
}

// --- 4 -------------------------------------------------------------------

Outcome mry_correctness() {
  Rng rng(1004);
  double sat = 0.0, tiny = 0.0, kkt = 0.0;
  std::uniform_real_distribution<double> frac(0.05, 0.9);
  for (int t = 0; t < 100; ++t) {
    const Matrix s = random_cov(5, rng).mat();
    const double max_off = (s - Matrix(s.diagonal().asDiagonal())).cwiseAbs().maxCoeff();

    MryParams m;
    m.lambda = max_off * (1.0 + 0.5 * frac(rng));
    const Matrix diag_inv = s.diagonal().cwiseInverse().asDiagonal();
    sat = std::max(sat, (mry(summary_of(s, 50), m).omega.mat() - diag_inv).cwiseAbs().maxCoeff());

    m.lambda = 1e-10;
    tiny = std::max(tiny, (mry(summary_of(s, 50), m).omega.mat() - s.inverse()).cwiseAbs().maxCoeff());

    m.lambda = frac(rng) * max_off;
    kkt = std::max(kkt, glasso_kkt(s, mry(summary_of(s, 50), m).omega.mat(), m.lambda));
  }
  std::ostringstream os;
  os << "100 inputs: saturation " << fmt("%.2g", sat) << ", tiny lambda " << fmt("%.2g", tiny)
     << ", KKT " << fmt("%.2g", kkt);
  return pass_if(sat <= 1e-6 && tiny <= 1e-5 && kkt <= 1e-4, os.str());
}

// --- 5 -------------------------------------------------------------------

Outcome mc_baselines() {
  struct Target {
    int config;
    double values[3];
    double tol;
  };
  const Target targets[] = {{1, {0.4167, 0.1858, 0.0866}, 0.03},
                            {2, {0.5856, 0.4433, 0.3379}, 0.04}};
  const char* settings[] = {"n=p+1", "n=2p", "n=6p"};
  bool ok = true;
  std::ostringstream os;
  os << kReplicates << " replicates;";
  for (const Target& t : targets) {
    const SimulationConfig cfg = make_simulation_config(t.config, 5000 + t.config, kReplicates);
    StudyOptions opt;
    opt.threads = kThreads;
    const CerReport rep = run_mc_study(cfg, {}, opt);
    os << " config" << t.config << ":";
    for (int s = 0; s < 3; ++s) {
      const double m = median_of(rep, "QDA", settings[s], static_cast<int>(cfg.p));
      const bool hit = std::abs(m - t.values[s]) <= t.tol;
      ok = ok && hit;
      os << " " << fmt("%.4f", m) << (hit ? "" : "(!)");
    }
  }
  return pass_if(ok, os.str());
}

// --- 6 -------------------------------------------------------------------

Outcome mc_ordering() {
  bool ok = true;
  std::ostringstream os;
  os << kReplicates << " replicates, n=p+1;";
  for (int config : {1, 2, 4}) {
    SimulationConfig cfg = make_simulation_config(config, 6000 + config, kReplicates);
    cfg.training_sizes = {TrainingSize::PPlus1};
    PipelineSpec mry_pipe = default_pipeline(EstimatorKind::Mry);
    mry_pipe.estimator.mry.penalty = cli::default_penalty_for_config(config);
    StudyOptions opt;
    opt.threads = kThreads;
    const CerReport rep = run_mc_study(cfg, {mry_pipe}, opt);
    const double full = median_of(rep, "QDA", "n=p+1", static_cast<int>(cfg.p));
    const DimensionChoice best = select_dimension(rep, mry_pipe.name, "n=p+1");
    bool hit = best.r_star > 0 && full - best.cer >= 0.05;
    if (config == 2) hit = hit && best.r_star == 2;
    ok = ok && hit;
    os << " config" << config << ": QDA " << fmt("%.4f", full) << " vs MRY " << fmt("%.4f", best.cer)
       << " [r=" << best.r_star << "]" << (hit ? "" : "(!)") << (config == 4 ? "" : ";");
  }
  return pass_if(ok, os.str());
}

// --- 7 -------------------------------------------------------------------

// Largest |rate(sample, r=p) - rate(QDA)| over matching replicates; -1 when a
// replicate is missing on either side.
double rotation_gap(const CerReport& rep, const std::string& setting, int p) {
  const CerCell* full = rep.find("QDA", setting, p);
  const CerCell* red = rep.find("SSDR_sample", setting, p);
  if (!full || !red || full->rates.size() != red->rates.size()) return -1.0;
  double gap = 0.0;
  for (std::size_t i = 0; i < full->rates.size(); ++i) {
    if (!full->rates[i] || !red->rates[i]) return -1.0;
    gap = std::max(gap, std::abs(*full->rates[i] - *red->rates[i]));
  }
  return gap;
}

Outcome rotation_invariance() {
  double worst = 0.0;
  int cases = 0;
  bool complete = true;
  auto record = [&](double gap) {
    if (gap < 0) complete = false;
    worst = std::max(worst, gap);
  };
  for (int config : {1, 2, 3, 4}) {
    SimulationConfig cfg = make_simulation_config(config, 7000 + config, 20);
    PipelineSpec pipe = default_pipeline(EstimatorKind::SampleInverse);
    pipe.dimensions = {static_cast<int>(cfg.p)};
    StudyOptions opt;
    opt.threads = kThreads;
    const CerReport rep = run_mc_study(cfg, {pipe}, opt);
    for (TrainingSize ts : cfg.training_sizes) {
      record(rotation_gap(rep, "n=" + to_string(ts), static_cast<int>(cfg.p)));
      cases += cfg.replicates;
    }
  }
  std::vector<std::pair<std::string, LabeledDataset>> sets;
  Rng rng(1007);
  const TheoremFixture fix = invariant_fixture({3, 7, 2}, rng);
  sets.emplace_back("synthetic", gaussian_classes(fix.means, fix.covs, 40, rng));
  for (const char* var : {"SSDR_BRC_CSV", "SSDR_PNG_CSV"}) {
    const char* path = std::getenv(var);
    if (!path || !std::filesystem::exists(path)) continue;
    CsvSchema schema;
    schema.label_column = std::string(var[5] == 'B' ? "class" : "species");
    sets.emplace_back(var, load_csv(path, schema));
  }
  for (auto& [name, ds] : sets) {
    CvOptions cv;
    cv.repeats = 3;
    cv.seed = 1007;
    cv.threads = kThreads;
    cv.dataset = name;
    if (name == "SSDR_PNG_CSV") {
      cv.standardize = true;
      cv.jitter_sigma = 1e-5;
    }
    PipelineSpec pipe = default_pipeline(EstimatorKind::SampleInverse);
    pipe.dimensions = {static_cast<int>(ds.p())};
    record(rotation_gap(repeated_kfold_cv(ds, {pipe}, cv), name, static_cast<int>(ds.p())));
    cases += cv.repeats;
  }
  std::ostringstream os;
  os << cases << " replicates/repeats over " << 4 + sets.size() << " data sources, max gap "
     << fmt("%.2g", worst) << (complete ? "" : ", some replicate missing");
  return pass_if(complete && worst <= 1e-10, os.str());
}

// --- 8 -------------------------------------------------------------------

Outcome real_data() {
  const char* brc = std::getenv("SSDR_BRC_CSV");
  const char* png = std::getenv("SSDR_PNG_CSV");
  const bool have_brc = brc && std::filesystem::exists(brc);
  const bool have_png = png && std::filesystem::exists(png);
  if (!have_brc && !have_png)
    return {Verdict::Skip, "set SSDR_BRC_CSV and SSDR_PNG_CSV to the prepared CSVs"};

  PipelineSpec mry_pipe = default_pipeline(EstimatorKind::Mry);
  mry_pipe.estimator.mry.penalty = MryPenalty::QdaRecommended;
  mry_pipe.estimator.mry.standardize_mean = true;

  bool ok = true;
  std::ostringstream os;
  os << kRepeats << " repeats;";
  if (have_brc) {
    CsvSchema schema;
    schema.label_column = std::string("class");
    const LabeledDataset ds = load_csv(brc, schema);
    CvOptions cv;
    cv.repeats = kRepeats;
    cv.seed = 8001;
    cv.threads = kThreads;
    cv.dataset = "BRC";
    std::vector<PipelineSpec> pipes{default_pipeline(EstimatorKind::SampleInverse),
                                    default_pipeline(EstimatorKind::Wang),
                                    default_pipeline(EstimatorKind::Bodnar), mry_pipe};
    const CerReport rep = repeated_kfold_cv(ds, pipes, cv);
    const double full = median_of(rep, "QDA", "BRC", static_cast<int>(ds.p()));
    bool any = false;
    os << " BRC QDA " << fmt("%.2f%%", 100 * full);
    for (const PipelineSpec& pipe : pipes) {
      const DimensionChoice c = select_dimension(rep, pipe.name, "BRC");
      os << ", " << pipe.name << " " << fmt("%.2f%%", 100 * c.cer) << " [" << c.r_star << "]";
      any = any || (c.r_star == 2 && c.cer <= 0.045);
    }
    const bool hit = std::abs(full - 0.0497) <= 0.015 && any;
    ok = ok && hit;
    os << (hit ? ";" : "(!);");
  } else {
    os << " BRC not supplied;";
  }
  if (have_png) {
    CsvSchema schema;
    schema.label_column = std::string("species");
    const LabeledDataset ds = load_csv(png, schema);
    CvOptions cv;
    cv.repeats = kRepeats;
    cv.seed = 8002;
    cv.threads = kThreads;
    cv.dataset = "PNG";
    cv.standardize = true;
    cv.jitter_sigma = 1e-5;
    const CerReport rep = repeated_kfold_cv(ds, {mry_pipe}, cv);
    const double full = median_of(rep, "QDA", "PNG", static_cast<int>(ds.p()));
    double best = std::numeric_limits<double>::infinity();
    int best_r = 0;
    for (int r = 1; r <= std::min<int>(5, static_cast<int>(ds.p())); ++r) {
      const double m = median_of(rep, mry_pipe.name, "PNG", r);
      if (m < best) best = m, best_r = r;
    }
    const bool hit = std::abs(full - 0.081) <= 0.02 && best <= 0.01;
    ok = ok && hit;
    os << " PNG QDA " << fmt("%.2f%%", 100 * full) << ", SSDR_mry " << fmt("%.2f%%", 100 * best)
       << " [r=" << best_r << "]" << (hit ? "" : "(!)");
  } else {
    os << " PNG not supplied";
  }
  // one dataset missing still counts as incomplete
  if (!have_brc || !have_png) return {ok ? Verdict::Skip : Verdict::Fail, os.str()};
  return pass_if(ok, os.str());
}

// --- 9 -------------------------------------------------------------------

bool same_rates(const CerReport& a, const CerReport& b) {
  if (a.cells.size() != b.cells.size()) return false;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const auto& x = a.cells[i].rates;
    const auto& y = b.cells[i].rates;
    if (x.size() != y.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j].has_value() != y[j].has_value()) return false;
      if (x[j] && std::memcmp(&*x[j], &*y[j], sizeof(double)) != 0) return false;
    }
  }
  return true;
}

Outcome determinism() {
  SimulationConfig cfg = make_simulation_config(2, 9001, 6);
  cfg.pool_size = 1000;
  PipelineSpec mry_pipe = default_pipeline(EstimatorKind::Mry);
  mry_pipe.estimator.mry.penalty = MryPenalty::QdaRecommended;
  mry_pipe.dimensions = {1, 2, 3};
  const std::vector<PipelineSpec> pipes{default_pipeline(EstimatorKind::SampleInverse),
                                        default_pipeline(EstimatorKind::Wang), mry_pipe};
  StudyOptions opt;
  opt.threads = 3;
  const bool mc_same = same_rates(run_mc_study(cfg, pipes, opt), run_mc_study(cfg, pipes, opt));

  Rng rng(9002);
  const TheoremFixture fix = invariant_fixture({3, 6, 2}, rng);
  const LabeledDataset ds = gaussian_classes(fix.means, fix.covs, 30, rng);
  CvOptions cv;
  cv.repeats = 3;
  cv.seed = 9003;
  cv.threads = 3;
  cv.jitter_sigma = 1e-3;
  const bool cv_same =
      same_rates(repeated_kfold_cv(ds, pipes, cv), repeated_kfold_cv(ds, pipes, cv));

  std::ostringstream os;
  os << "simulate rerun " << (mc_same ? "identical" : "differs") << ", cv rerun "
     << (cv_same ? "identical" : "differs") << " (3 threads)";
  return pass_if(mc_same && cv_same, os.str());
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double budget_s;  // 0: no runtime bound
  };
  const std::vector<Criterion> criteria{
      {"theorem reproduction", theorem_reproduction, 60},
      {"lemma suite", lemma_suite_check, 30},
      {"estimator oracles", estimator_oracles, 0},
      {"MRY correctness", mry_correctness, 120},
      {"MC baselines", mc_baselines, 600},
      {"MC ordering", mc_ordering, 0},
      {"rotation invariance", rotation_invariance, 0},
      {"real data", real_data, 0},
      {"determinism", determinism, 0},
  };
  std::set<int> only;
  if (const char* v = std::getenv("SSDR_ACCEPT_ONLY")) {
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) only.insert(std::atoi(tok.c_str()));
  }
  std::printf("acceptance: %d threads, %d replicates, %d repeats\n", kThreads, kReplicates,
              kRepeats);
  if (kReplicates != 200 || kRepeats != 50)
    std::printf("acceptance: reduced scale, results are not the acceptance verdict\n");
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].run();
    } catch (const std::exception& e) {
      out = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criteria[i].budget_s > 0 && secs > criteria[i].budget_s && out.verdict == Verdict::Pass) {
      out.verdict = Verdict::Fail;
      out.detail += ", over the " + fmt("%.0f", criteria[i].budget_s) + " s budget";
    }
    const char* tag = out.verdict == Verdict::Pass ? "PASS" : out.verdict == Verdict::Skip ? "SKIP" : "FAIL";
    if (out.verdict == Verdict::Fail) ++failures;
    std::printf("criterion %d %s: %s: %s (%.1f s)\n", id, tag, criteria[i].name.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
