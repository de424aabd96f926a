#pragma once

#include "ssdr/errors.hpp"
#include "ssdr/experiments.hpp"
#include "ssdr/report.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ssdr::cli {

inline constexpr int kConfigSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kFatal = 1, kPartialFailure = 2 };

/// Bad configuration; `path` names the offending key ("/pipelines/0/lambda",
/// "--replicates", ...).
class ConfigError : public InvalidInput {
public:
  ConfigError(std::string path, const std::string& what)
      : InvalidInput("config error at " + path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

struct SimulateSettings {
  int config_id = 1;
  int replicates = 200;
  std::optional<std::uint64_t> seed;
  std::vector<TrainingSize> training_sizes{TrainingSize::PPlus1, TrainingSize::TwoP,
                                           TrainingSize::SixP};
  std::size_t pool_size = 5000;
  std::size_t validation_size = 500;
  bool include_full_qda = true;
  bool include_exact_qda = false;
  std::vector<PipelineSpec> pipelines;  // empty: the default MRY pipeline
  std::optional<int> threads;
  std::string output_dir = ".";
  std::string output_stem;
};

struct CvSettings {
  std::string data;
  std::string name;
  std::string label_column;  // a header name, or "#<index>"
  bool header = true;
  std::vector<std::string> remove_classes;
  int folds = 10;
  int repeats = 50;
  std::optional<std::uint64_t> seed;
  bool standardize = false;
  std::optional<double> jitter_sigma;
  bool include_full_qda = true;
  std::vector<PipelineSpec> pipelines;
  std::optional<int> threads;
  std::string output_dir = ".";
  std::string output_stem;
};

/// Parses a config file body. Unknown keys and wrong types are errors.
/// Relative paths inside the file resolve against `base_dir`.
SimulateSettings simulate_from_json(const nlohmann::json& j);
CvSettings cv_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

nlohmann::json load_config_file(const std::filesystem::path& path);

nlohmann::json pipeline_to_json(const PipelineSpec& p);
PipelineSpec pipeline_from_json(const nlohmann::json& j, const std::string& path,
                                MryPenalty default_penalty);

/// Resolved settings as JSON; parsing it back gives the same settings.
nlohmann::json to_json(const SimulateSettings& s);
nlohmann::json to_json(const CvSettings& s);

/// Penalty used by the default MRY pipeline of a simulation configuration.
MryPenalty default_penalty_for_config(int config_id);

/// Fills seed, pipelines, stem and threads; validates ranges.
void finalize(SimulateSettings& s, const std::string& default_stem);
void finalize(CvSettings& s, const std::string& default_stem);

/// Dimension list from "all" or a comma-separated list.
std::vector<int> parse_dimensions(const std::string& text, const std::string& path);

struct RunResult {
  CerReport report;
  RunInfo info;
};

/// Runs a finalized study without writing anything.
RunResult execute(const SimulateSettings& s);
RunResult execute(const CvSettings& s);

int run_simulate(const SimulateSettings& s);
int run_cv(const CvSettings& s);
int run_select_dim(const std::filesystem::path& report, const std::string& method);
int run_report(const std::vector<std::filesystem::path>& reports,
               const std::filesystem::path& out);

}  // namespace ssdr::cli
