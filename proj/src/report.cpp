#include "ssdr/report.hpp"

#include "ssdr/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <tuple>

#ifndef SSDR_VERSION
#define SSDR_VERSION "0.0.0"
#endif

namespace ssdr {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json summary_json(const RateSummary& s) {
  return {{"median", number_or_null(s.median)},
          {"mean", number_or_null(s.mean)},
          {"sd", number_or_null(s.sd)},
          {"count", s.count},
          {"missing", s.missing}};
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot write " + path.string());
  return os;
}

void write_provenance(std::ostream& os, const RunInfo& info) {
  os << "# tool: ssdr " << tool_version() << "\n";
  os << "# command: " << info.command << "\n";
  os << "# seed: " << info.seed << "\n";
  os << "# config: " << info.config.dump() << "\n";
}

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("report is missing '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

std::string tool_version() { return SSDR_VERSION; }

std::string utc_timestamp() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<SelectionRow> selection_table(const CerReport& report) {
  // first-appearance order of (method, setting)
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& c : report.cells) {
    const auto key = std::make_pair(c.method, c.setting);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::vector<SelectionRow> rows;
  for (const auto& [method, setting] : keys) {
    SelectionRow row;
    row.method = method;
    row.setting = setting;
    try {
      const DimensionChoice choice = select_dimension(report, method, setting);
      row.r_star = choice.r_star;
    } catch (const InvalidInput&) {
      row.r_star = 0;  // every dimension failed
    }
    for (const auto& c : report.cells) {
      if (c.method != method || c.setting != setting) continue;
      row.n_i = c.n_i;
      row.full_feature = c.full_feature;
      if (c.dimension == row.r_star) row.summary = c.summary();
    }
    if (row.r_star == 0) row.summary.median = row.summary.mean = row.summary.sd = NAN;
    rows.push_back(row);
  }
  return rows;
}

json report_to_json(const CerReport& report, const RunInfo& info) {
  json results = json::array();
  for (const auto& c : report.cells) {
    json rates = json::array();
    for (const auto& r : c.rates) rates.push_back(r ? json(*r) : json(nullptr));
    results.push_back({{"method", c.method},
                       {"setting", c.setting},
                       {"n_i", c.n_i},
                       {"dimension", c.dimension},
                       {"full_feature", c.full_feature},
                       {"rates", rates},
                       {"summary", summary_json(c.summary())}});
  }
  json selection = json::array();
  for (const auto& row : selection_table(report)) {
    selection.push_back({{"method", row.method},
                         {"setting", row.setting},
                         {"n_i", row.n_i},
                         {"full_feature", row.full_feature},
                         {"r_star", row.r_star},
                         {"summary", summary_json(row.summary)}});
  }
  json meta = json::object();
  for (const auto& [k, v] : report.metadata) meta[k] = v;
  return {{"schema_version", kReportSchemaVersion},
          {"tool", "ssdr"},
          {"tool_version", tool_version()},
          {"created_utc", info.created_utc},
          {"command", info.command},
          {"config", info.config},
          {"seed", info.seed},
          {"threads", info.threads},
          {"metadata", meta},
          {"failures", report.failures},
          {"results", results},
          {"selection", selection}};
}

LoadedReport report_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version")) {
    throw SchemaError("not an ssdr report: schema_version is missing");
  }
  const int version = j.at("schema_version").get<int>();
  if (version != kReportSchemaVersion) {
    throw SchemaError("report schema_version " + std::to_string(version) +
                      " is not supported (expected " +
                      std::to_string(kReportSchemaVersion) + ")");
  }
  LoadedReport out;
  try {
    out.info.command = get_field<std::string>(j, "command");
    out.info.config = j.value("config", json::object());
    out.info.seed = get_field<std::uint64_t>(j, "seed");
    out.info.threads = j.value("threads", 1);
    out.info.created_utc = j.value("created_utc", "");
    out.report.failures = j.value("failures", std::size_t{0});
    const json meta = j.value("metadata", json::object());
    for (const auto& [k, v] : meta.items()) {
      out.report.metadata[k] = v.get<std::string>();
    }
    for (const auto& r : get_field<json>(j, "results")) {
      CerCell c;
      c.method = r.at("method").get<std::string>();
      c.setting = r.at("setting").get<std::string>();
      c.n_i = r.value("n_i", 0);
      c.dimension = r.at("dimension").get<int>();
      c.full_feature = r.value("full_feature", false);
      for (const auto& v : r.at("rates")) {
        c.rates.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
      }
      out.report.cells.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  }
  return out;
}

void write_report_json(const CerReport& report, const RunInfo& info,
                       const std::filesystem::path& path) {
  auto os = open_out(path);
  os << report_to_json(report, info).dump(1) << "\n";
}

LoadedReport read_report_json(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open report " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

void write_summary_csv(const CerReport& report, const RunInfo& info,
                       const std::filesystem::path& path) {
  auto os = open_out(path);
  write_provenance(os, info);
  os << "method,setting,n_i,dimension,full_feature,median,mean,sd,count,missing\n";
  for (const auto& c : report.cells) {
    const RateSummary s = c.summary();
    os << csv_quote(c.method) << ',' << csv_quote(c.setting) << ',' << c.n_i << ','
       << c.dimension << ',' << (c.full_feature ? "true" : "false") << ','
       << format_double(s.median) << ',' << format_double(s.mean) << ','
       << format_double(s.sd) << ',' << s.count << ',' << s.missing << '\n';
  }
}

void write_selection_csv(const CerReport& report, const RunInfo& info,
                         const std::filesystem::path& path) {
  auto os = open_out(path);
  write_provenance(os, info);
  os << "method,setting,n_i,full_feature,r_star,median,sd,missing\n";
  for (const auto& row : selection_table(report)) {
    os << csv_quote(row.method) << ',' << csv_quote(row.setting) << ',' << row.n_i << ','
       << (row.full_feature ? "true" : "false") << ',' << row.r_star << ','
       << format_double(row.summary.median) << ',' << format_double(row.summary.sd)
       << ',' << row.summary.missing << '\n';
  }
}

std::string dataset_label(const CerReport& report) {
  const auto kind = report.metadata.find("kind");
  if (kind != report.metadata.end() && kind->second == "simulation") {
    const auto id = report.metadata.find("config_id");
    return "config" + (id == report.metadata.end() ? std::string("?") : id->second);
  }
  const auto ds = report.metadata.find("dataset");
  return ds == report.metadata.end() ? std::string() : ds->second;
}

void write_merged_csv(const std::vector<std::pair<std::string, LoadedReport>>& runs,
                      const std::filesystem::path& path) {
  struct Row {
    std::string dataset, method, setting, source;
    SelectionRow sel;
  };
  std::vector<Row> rows;
  for (const auto& [source, run] : runs) {
    const std::string dataset = dataset_label(run.report);
    for (const auto& sel : selection_table(run.report)) {
      rows.push_back({dataset, sel.method, sel.setting, source, sel});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.dataset, a.method, a.setting) < std::tie(b.dataset, b.method, b.setting);
  });
  auto os = open_out(path);
  os << "# tool: ssdr " << tool_version() << "\n";
  for (const auto& [source, run] : runs) {
    os << "# source: " << source << " seed " << run.info.seed << " command "
       << run.info.command << " config " << run.info.config.dump() << "\n";
  }
  os << "dataset,method,setting,n_i,full_feature,r_star,median,sd,missing,source\n";
  for (const auto& r : rows) {
    os << csv_quote(r.dataset) << ',' << csv_quote(r.method) << ','
       << csv_quote(r.setting) << ',' << r.sel.n_i << ','
       << (r.sel.full_feature ? "true" : "false") << ',' << r.sel.r_star << ','
       << format_double(r.sel.summary.median) << ',' << format_double(r.sel.summary.sd)
       << ',' << r.sel.summary.missing << ',' << csv_quote(r.source) << '\n';
  }
}

}  // namespace ssdr
