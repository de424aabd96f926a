#include "cli.hpp"

#include "ssdr/report.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace ssdr;
using namespace ssdr::cli;

// Pipeline-shaping flags shared by simulate and cv.
struct PipelineFlags {
  std::vector<std::string> estimators;
  std::string penalty;
  std::string dims;
  double lambda = 0.0;
  double gamma = 0.0;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;

  void add_to(CLI::App* app) {
    app->add_option("--estimator", estimators,
                    "sample, haff, wang, bodnar or mry; replaces configured pipelines")
        ->delimiter(',');
    app->add_option("--penalty", penalty, "MRY penalty: simple or qda_recommended");
    app->add_option("--r", dims, "reduced dimensions: all, or a list such as 1,2,3");
    lambda_opt = app->add_option("--lambda", lambda, "fixed MRY lambda (disables tuning)");
    gamma_opt = app->add_option("--gamma", gamma, "gamma of the QDA-recommended penalty");
  }

  void apply(std::vector<PipelineSpec>& pipelines, MryPenalty default_penalty) const {
    if (!estimators.empty()) {
      pipelines.clear();
      for (const auto& name : estimators) {
        EstimatorKind kind;
        try {
          kind = parse_estimator_kind(name);
        } catch (const InvalidParameter& e) {
          throw ConfigError("--estimator", e.what());
        }
        PipelineSpec p = default_pipeline(kind);
        p.estimator.mry.penalty = default_penalty;
        pipelines.push_back(p);
      }
    }
    const bool touches = !penalty.empty() || !dims.empty() || lambda_opt->count() ||
                         gamma_opt->count();
    if (touches && pipelines.empty()) {
      PipelineSpec p = default_pipeline(EstimatorKind::Mry);
      p.estimator.mry.penalty = default_penalty;
      pipelines.push_back(p);
    }
    for (auto& p : pipelines) {
      if (!dims.empty()) p.dimensions = parse_dimensions(dims, "--r");
      if (p.estimator.kind != EstimatorKind::Mry) continue;
      if (!penalty.empty()) {
        if (penalty == "simple") {
          p.estimator.mry.penalty = MryPenalty::Simple;
        } else if (penalty == "qda_recommended" || penalty == "qda") {
          p.estimator.mry.penalty = MryPenalty::QdaRecommended;
        } else {
          throw ConfigError("--penalty", "unknown penalty '" + penalty + "'");
        }
      }
      if (lambda_opt->count()) {
        if (!(lambda > 0)) throw ConfigError("--lambda", "must be > 0");
        p.estimator.mry.lambda = lambda;
        p.tune_lambda = false;
      }
      if (gamma_opt->count()) {
        if (!(gamma > 0)) throw ConfigError("--gamma", "must be > 0");
        p.estimator.mry.gamma = gamma;
      }
    }
  }
};

std::string stem_of(const std::string& config_path) {
  return std::filesystem::path(config_path).stem().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ssdr: dimension-reduced QDA experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ssdr::tool_version());

  // simulate ----------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "Monte Carlo study on a built-in configuration");
  std::string sim_config;
  int config_id = 0;
  int replicates = 0;
  std::uint64_t sim_seed = 0;
  std::vector<std::string> sizes;
  std::size_t pool_size = 0, validation_size = 0;
  bool exact_qda = false, sim_no_full = false;
  std::string sim_out, sim_stem;
  int sim_threads = 0;
  PipelineFlags sim_flags;
  sim->add_option("--config", sim_config, "JSON config file")->check(CLI::ExistingFile);
  auto* o_config_id = sim->add_option("--config-id", config_id, "configuration 1-4");
  auto* o_replicates = sim->add_option("--replicates", replicates, "Monte Carlo replicates");
  auto* o_sim_seed = sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--sizes", sizes, "training sizes: p+1, 2p, 6p")->delimiter(',');
  auto* o_pool = sim->add_option("--pool-size", pool_size, "observations per class pool");
  auto* o_val = sim->add_option("--validation-size", validation_size,
                                "validation draw per class for lambda tuning");
  sim->add_flag("--exact-qda", exact_qda, "also score QDA with the true parameters");
  sim->add_flag("--no-full-qda", sim_no_full, "skip the full-feature QDA baseline");
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--stem", sim_stem, "output file stem");
  auto* o_sim_threads = sim->add_option("--threads", sim_threads, "worker threads");
  sim_flags.add_to(sim);

  // cv ----------------------------------------------------------------------
  auto* cv = app.add_subcommand("cv", "Repeated stratified k-fold CV on a CSV dataset");
  std::string cv_config, data, name, label, cv_out, cv_stem;
  bool no_header = false, standardize = false, cv_no_full = false;
  std::vector<std::string> remove;
  int folds = 0, repeats = 0, cv_threads = 0;
  std::uint64_t cv_seed = 0;
  double jitter = 0.0;
  PipelineFlags cv_flags;
  cv->add_option("--config", cv_config, "JSON config file")->check(CLI::ExistingFile);
  cv->add_option("--data", data, "CSV dataset");
  cv->add_option("--name", name, "dataset name used in reports");
  cv->add_option("--label", label, "label column: header name or 0-based index");
  cv->add_flag("--no-header", no_header, "CSV has no header row");
  cv->add_option("--remove-class", remove, "drop a class by label (repeatable)");
  auto* o_folds = cv->add_option("--folds", folds, "folds per repeat");
  auto* o_repeats = cv->add_option("--repeats", repeats, "CV repeats");
  auto* o_cv_seed = cv->add_option("--seed", cv_seed, "master seed");
  cv->add_flag("--standardize", standardize, "studentize with training-fold statistics");
  auto* o_jitter = cv->add_option("--jitter", jitter, "add N(0, sigma^2) noise once");
  cv->add_flag("--no-full-qda", cv_no_full, "skip the full-feature QDA baseline");
  cv->add_option("--out", cv_out, "output directory");
  cv->add_option("--stem", cv_stem, "output file stem");
  auto* o_cv_threads = cv->add_option("--threads", cv_threads, "worker threads");
  cv_flags.add_to(cv);

  // select-dim / report -------------------------------------------------------
  auto* sel = app.add_subcommand("select-dim", "Print the selected dimension per method");
  std::string sel_report, sel_method;
  sel->add_option("report", sel_report, "report JSON")->required();
  sel->add_option("--method", sel_method, "restrict to one method");

  auto* rep = app.add_subcommand("report", "Merge report JSON files into one CSV");
  std::vector<std::string> rep_inputs;
  std::string rep_out = "merged.csv";
  rep->add_option("reports", rep_inputs, "report JSON files")->required();
  rep->add_option("--out", rep_out, "merged CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kFatal;
  }

  try {
    if (*sim) {
      SimulateSettings s;
      if (!sim_config.empty()) s = simulate_from_json(load_config_file(sim_config));
      if (o_config_id->count()) {
        if (config_id < 1 || config_id > 4) {
          throw ConfigError("--config-id", "unknown configuration " + std::to_string(config_id) +
                                               " (expected 1, 2, 3 or 4)");
        }
        s.config_id = config_id;
      }
      if (o_replicates->count()) {
        if (replicates < 1) throw ConfigError("--replicates", "must be >= 1");
        s.replicates = replicates;
      }
      if (o_sim_seed->count()) s.seed = sim_seed;
      if (!sizes.empty()) {
        s.training_sizes.clear();
        for (const auto& t : sizes) {
          try {
            s.training_sizes.push_back(parse_training_size(t));
          } catch (const InvalidParameter& e) {
            throw ConfigError("--sizes", e.what());
          }
        }
      }
      if (o_pool->count()) s.pool_size = pool_size;
      if (o_val->count()) s.validation_size = validation_size;
      if (exact_qda) s.include_exact_qda = true;
      if (sim_no_full) s.include_full_qda = false;
      if (!sim_out.empty()) s.output_dir = sim_out;
      if (!sim_stem.empty()) s.output_stem = sim_stem;
      if (o_sim_threads->count()) {
        if (sim_threads < 1) throw ConfigError("--threads", "must be >= 1");
        s.threads = sim_threads;
      }
      sim_flags.apply(s.pipelines, default_penalty_for_config(s.config_id));
      finalize(s, sim_config.empty() ? "simulate_config" + std::to_string(s.config_id)
                                     : stem_of(sim_config));
      return run_simulate(s);
    }
    if (*cv) {
      CvSettings s;
      if (!cv_config.empty()) {
        s = cv_from_json(load_config_file(cv_config),
                         std::filesystem::path(cv_config).parent_path());
      }
      if (!data.empty()) s.data = data;
      if (!name.empty()) s.name = name;
      if (!label.empty()) {
        const bool numeric = label.find_first_not_of("0123456789") == std::string::npos;
        s.label_column = numeric ? "#" + label : label;
      }
      if (no_header) s.header = false;
      if (!remove.empty()) s.remove_classes = remove;
      if (o_folds->count()) s.folds = folds;
      if (o_repeats->count()) {
        if (repeats < 1) throw ConfigError("--repeats", "must be >= 1");
        s.repeats = repeats;
      }
      if (o_cv_seed->count()) s.seed = cv_seed;
      if (standardize) s.standardize = true;
      if (o_jitter->count()) s.jitter_sigma = jitter;
      if (cv_no_full) s.include_full_qda = false;
      if (!cv_out.empty()) s.output_dir = cv_out;
      if (!cv_stem.empty()) s.output_stem = cv_stem;
      if (o_cv_threads->count()) {
        if (cv_threads < 1) throw ConfigError("--threads", "must be >= 1");
        s.threads = cv_threads;
      }
      cv_flags.apply(s.pipelines, MryPenalty::Simple);
      finalize(s, cv_config.empty() ? std::string() : stem_of(cv_config));
      return run_cv(s);
    }
    if (*sel) return run_select_dim(sel_report, sel_method);
    if (*rep) {
      std::vector<std::filesystem::path> inputs(rep_inputs.begin(), rep_inputs.end());
      return run_report(inputs, rep_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFatal;
  }
  return kFatal;
}
