#pragma once

#include "ssdr/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ssdr {

inline constexpr int kReportSchemaVersion = 1;

std::string tool_version();

/// Everything needed to rerun the command that produced a report.
struct RunInfo {
  std::string command;
  nlohmann::json config;  // fully resolved
  std::uint64_t seed = 0;
  int threads = 1;
  std::string created_utc;  // excluded from determinism comparisons
};

/// ISO-8601 UTC timestamp of "now".
std::string utc_timestamp();

struct SelectionRow {
  std::string method;
  std::string setting;
  int n_i = 0;
  bool full_feature = false;
  int r_star = 0;
  RateSummary summary;
};

/// Best dimension per (method, setting) under the select_dimension rule.
std::vector<SelectionRow> selection_table(const CerReport& report);

nlohmann::json report_to_json(const CerReport& report, const RunInfo& info);

struct LoadedReport {
  CerReport report;
  RunInfo info;
};

/// Throws SchemaError on a missing or different schema_version.
LoadedReport report_from_json(const nlohmann::json& j);

void write_report_json(const CerReport& report, const RunInfo& info,
                       const std::filesystem::path& path);
LoadedReport read_report_json(const std::filesystem::path& path);

/// One row per (method, setting, dimension); leading `#` lines carry the tool
/// version, seed and resolved config.
void write_summary_csv(const CerReport& report, const RunInfo& info,
                       const std::filesystem::path& path);

/// One row per (method, setting) at its selected dimension.
void write_selection_csv(const CerReport& report, const RunInfo& info,
                         const std::filesystem::path& path);

/// "config<id>" for simulation reports, the dataset name for CV reports.
std::string dataset_label(const CerReport& report);

/// Selection rows of several reports, sorted by dataset, method, setting.
void write_merged_csv(const std::vector<std::pair<std::string, LoadedReport>>& runs,
                      const std::filesystem::path& path);

/// Shortest round-trip text for a double; "NA" for NaN.
std::string format_double(double v);

}  // namespace ssdr
