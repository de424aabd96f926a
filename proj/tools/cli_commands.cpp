#include "cli.hpp"

#include "ssdr/report.hpp"

#include <cstdio>
#include <iomanip>
#include <iostream>

namespace ssdr::cli {

namespace fs = std::filesystem;

namespace {

fs::path prepare_output_dir(const std::string& dir) {
  const fs::path out = dir.empty() ? fs::path(".") : fs::path(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    throw ConfigError("/output_dir", "cannot create output directory " + out.string());
  }
  return out;
}

void print_selection(const CerReport& report) {
  std::cout << std::left << std::setw(22) << "method" << std::setw(12) << "setting"
            << std::right << std::setw(10) << "CER(%)" << std::setw(9) << "SD"
            << std::setw(6) << "r*" << "\n";
  for (const auto& row : selection_table(report)) {
    std::cout << std::left << std::setw(22) << row.method << std::setw(12) << row.setting
              << std::right << std::fixed << std::setprecision(2) << std::setw(10)
              << 100.0 * row.summary.median << std::setw(9) << 100.0 * row.summary.sd
              << std::setw(6) << row.r_star << "\n";
  }
  std::cout.unsetf(std::ios::floatfield);
}

int write_outputs(const CerReport& report, const RunInfo& info, const std::string& dir,
                  const std::string& stem) {
  const fs::path out = prepare_output_dir(dir);
  const fs::path json_path = out / (stem + "_report.json");
  const fs::path csv_path = out / (stem + "_summary.csv");
  const fs::path sel_path = out / (stem + "_selection.csv");
  write_report_json(report, info, json_path);
  write_summary_csv(report, info, csv_path);
  write_selection_csv(report, info, sel_path);
  print_selection(report);
  std::cerr << "wrote " << json_path.string() << ", " << csv_path.string() << ", "
            << sel_path.string() << "\n";
  if (report.failures > 0) {
    std::cerr << "warning: " << report.failures
              << " replicate/repeat results are missing because an estimator failed\n";
    return kPartialFailure;
  }
  return kOk;
}

}  // namespace

RunResult execute(const SimulateSettings& s) {
  SimulationConfig cfg = make_simulation_config(s.config_id, *s.seed, s.replicates);
  cfg.training_sizes = s.training_sizes;
  cfg.pool_size = s.pool_size;
  cfg.validation_size = s.validation_size;
  StudyOptions options;
  options.threads = *s.threads;
  options.include_full_qda = s.include_full_qda;
  options.include_exact_qda = s.include_exact_qda;
  RunResult out{run_mc_study(cfg, s.pipelines, options), {}};

  out.info.command = "simulate";
  out.info.config = to_json(s);
  out.info.seed = *s.seed;
  out.info.threads = *s.threads;
  out.info.created_utc = utc_timestamp();
  return out;
}

RunResult execute(const CvSettings& s) {
  CsvSchema schema;
  schema.header = s.header;
  if (s.label_column[0] == '#') {
    schema.label_column = static_cast<std::size_t>(std::stoul(s.label_column.substr(1)));
  } else {
    schema.label_column = s.label_column;
  }
  LabeledDataset ds = load_csv(s.data, schema);
  if (!s.remove_classes.empty()) ds = remove_classes(ds, s.remove_classes);

  CvOptions options;
  options.folds = s.folds;
  options.repeats = s.repeats;
  options.seed = *s.seed;
  options.threads = *s.threads;
  options.dataset = s.name;
  options.standardize = s.standardize;
  options.jitter_sigma = s.jitter_sigma;
  options.include_full_qda = s.include_full_qda;
  RunResult out{repeated_kfold_cv(ds, s.pipelines, options), {}};

  out.info.command = "cv";
  out.info.config = to_json(s);
  out.info.seed = *s.seed;
  out.info.threads = *s.threads;
  out.info.created_utc = utc_timestamp();
  return out;
}

int run_simulate(const SimulateSettings& s) {
  const RunResult r = execute(s);
  return write_outputs(r.report, r.info, s.output_dir, s.output_stem);
}

int run_cv(const CvSettings& s) {
  const RunResult r = execute(s);
  return write_outputs(r.report, r.info, s.output_dir, s.output_stem);
}

int run_select_dim(const fs::path& path, const std::string& method) {
  const LoadedReport loaded = read_report_json(path);
  bool any = false;
  std::cout << "method,setting,r_star,median_cer\n";
  for (const auto& row : selection_table(loaded.report)) {
    if (!method.empty() && row.method != method) continue;
    any = true;
    std::cout << row.method << ',' << row.setting << ',' << row.r_star << ','
              << format_double(row.summary.median) << "\n";
  }
  if (!any) {
    throw InvalidInput("no results for method '" + method + "' in " + path.string());
  }
  return kOk;
}

int run_report(const std::vector<fs::path>& reports, const fs::path& out) {
  std::vector<std::pair<std::string, LoadedReport>> runs;
  for (const auto& path : reports) {
    if (!fs::exists(path)) throw InvalidInput("report not found: " + path.string());
    try {
      runs.emplace_back(path.filename().string(), read_report_json(path));
    } catch (const SchemaError& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_merged_csv(runs, out);
  std::cerr << "wrote " << out.string() << "\n";
  return kOk;
}

}  // namespace ssdr::cli
