#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace ssdr::cli {

using nlohmann::json;

namespace {

std::string child(const std::string& path, const std::string& key) {
  return path + "/" + key;
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(child(path, key), "unknown key");
  }
}

double get_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

int get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(path, "integer out of range");
  }
  return static_cast<int>(x);
}

std::size_t get_count(const json& v, const std::string& path) {
  const int x = get_int(v, path);
  if (x < 1) throw ConfigError(path, "must be >= 1");
  return static_cast<std::size_t>(x);
}

std::uint64_t get_seed(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0)) {
    throw ConfigError(path, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

void check_schema_version(const json& j) {
  if (!j.is_object()) throw ConfigError("/", "expected an object");
  if (!j.contains("schema_version")) throw ConfigError("/schema_version", "missing");
  const int v = get_int(j.at("schema_version"), "/schema_version");
  if (v != kConfigSchemaVersion) {
    throw ConfigError("/schema_version", "unsupported version " + std::to_string(v) +
                                             " (expected " +
                                             std::to_string(kConfigSchemaVersion) + ")");
  }
}

std::string penalty_name(MryPenalty p) {
  return p == MryPenalty::Simple ? "simple" : "qda_recommended";
}

MryPenalty parse_penalty(const std::string& text, const std::string& path) {
  if (text == "simple") return MryPenalty::Simple;
  if (text == "qda_recommended" || text == "qda") return MryPenalty::QdaRecommended;
  throw ConfigError(path, "unknown penalty '" + text + "' (expected simple or qda_recommended)");
}

std::vector<PipelineSpec> pipelines_from_json(const json& v, const std::string& path,
                                              MryPenalty default_penalty) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of pipelines");
  std::vector<PipelineSpec> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = child(path, std::to_string(i));
    out.push_back(pipeline_from_json(v[i], p, default_penalty));
    if (!names.insert(out.back().name).second) {
      throw ConfigError(child(p, "name"), "duplicate pipeline name '" + out.back().name + "'");
    }
  }
  return out;
}

json dimensions_to_json(const std::vector<int>& dims) {
  if (dims.empty()) return "all";
  return dims;
}

std::vector<int> dimensions_from_json(const json& v, const std::string& path) {
  if (v.is_string()) return parse_dimensions(v.get<std::string>(), path);
  if (!v.is_array()) throw ConfigError(path, "expected \"all\" or a list of integers");
  std::vector<int> dims;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int r = get_int(v[i], child(path, std::to_string(i)));
    if (r < 1) throw ConfigError(child(path, std::to_string(i)), "dimension must be >= 1");
    dims.push_back(r);
  }
  return dims;
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  const std::uint64_t hi = rd(), lo = rd();
  // stay within 2^53 so the seed survives any JSON reader unchanged
  return ((hi << 32) | lo) & ((std::uint64_t{1} << 53) - 1);
}

void finalize_pipelines(std::vector<PipelineSpec>& pipelines, MryPenalty default_penalty,
                        const std::string& path) {
  if (pipelines.empty()) {
    PipelineSpec p = default_pipeline(EstimatorKind::Mry);
    p.estimator.mry.penalty = default_penalty;
    pipelines.push_back(p);
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < pipelines.size(); ++i) {
    const std::string p = child(path, std::to_string(i));
    try {
      pipelines[i].validate();
    } catch (const Error& e) {
      throw ConfigError(p, e.what());
    }
    if (!names.insert(pipelines[i].name).second) {
      throw ConfigError(child(p, "name"), "duplicate pipeline name '" + pipelines[i].name + "'");
    }
  }
}

}  // namespace

std::vector<int> parse_dimensions(const std::string& text, const std::string& path) {
  if (text == "all") return {};
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int r = std::stoi(item, &used);
      if (used != item.size() || r < 1) throw std::invalid_argument(item);
      dims.push_back(r);
    } catch (const std::exception&) {
      throw ConfigError(path, "expected \"all\" or comma-separated positive integers, got '" +
                                  text + "'");
    }
  }
  if (dims.empty()) throw ConfigError(path, "empty dimension list");
  return dims;
}

MryPenalty default_penalty_for_config(int config_id) {
  return (config_id == 2 || config_id == 4) ? MryPenalty::QdaRecommended : MryPenalty::Simple;
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open config file " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

json pipeline_to_json(const PipelineSpec& p) {
  json j{{"name", p.name},
         {"estimator", std::string(to_string(p.estimator.kind))},
         {"dimensions", dimensions_to_json(p.dimensions)}};
  switch (p.estimator.kind) {
    case EstimatorKind::Mry: {
      const MryParams& m = p.estimator.mry;
      j["tune_lambda"] = p.tune_lambda;
      j["lambda"] = m.lambda;
      j["penalty"] = penalty_name(m.penalty);
      j["gamma"] = m.gamma;
      j["standardize_mean"] = m.standardize_mean;
      j["admm"] = {{"rho", m.admm.rho},
                   {"tolerance", m.admm.tolerance},
                   {"max_iterations", m.admm.max_iterations},
                   {"balance_ratio", m.admm.balance_ratio}};
      j["lambda_grid"] = {{"points", p.lambda_grid.points},
                          {"c_lo", p.lambda_grid.c_lo},
                          {"c_hi", p.lambda_grid.c_hi},
                          {"values", p.lambda_grid.explicit_grid}};
      j["inner_folds"] = p.inner_folds;
      break;
    }
    case EstimatorKind::Bodnar:
      j["bodnar_target"] =
          p.estimator.bodnar_target.kind == BodnarTargetKind::DiagonalOfS ? "diagonal_of_s"
                                                                          : "identity";
      j["spd_repair_eps"] = p.estimator.spd_repair_eps;
      break;
    case EstimatorKind::Wang:
      j["wang_grid_size"] = p.estimator.wang_grid_size;
      break;
    default:
      break;
  }
  return j;
}

PipelineSpec pipeline_from_json(const json& j, const std::string& path,
                                MryPenalty default_penalty) {
  check_keys(j, path,
             {"name", "estimator", "dimensions", "tune_lambda", "lambda", "penalty", "gamma",
              "standardize_mean", "admm", "lambda_grid", "inner_folds", "bodnar_target",
              "wang_grid_size", "spd_repair_eps"});
  if (!j.contains("estimator")) throw ConfigError(child(path, "estimator"), "missing");
  EstimatorKind kind;
  try {
    kind = parse_estimator_kind(get_string(j.at("estimator"), child(path, "estimator")));
  } catch (const InvalidParameter& e) {
    throw ConfigError(child(path, "estimator"), e.what());
  }
  PipelineSpec p = default_pipeline(kind);
  p.estimator.mry.penalty = default_penalty;
  if (j.contains("name")) p.name = get_string(j.at("name"), child(path, "name"));
  if (j.contains("dimensions")) {
    p.dimensions = dimensions_from_json(j.at("dimensions"), child(path, "dimensions"));
  }
  MryParams& m = p.estimator.mry;
  if (j.contains("tune_lambda")) p.tune_lambda = get_bool(j.at("tune_lambda"), child(path, "tune_lambda"));
  if (j.contains("lambda")) {
    m.lambda = get_double(j.at("lambda"), child(path, "lambda"));
    if (!(m.lambda > 0)) throw ConfigError(child(path, "lambda"), "must be > 0");
  }
  if (j.contains("penalty")) {
    m.penalty = parse_penalty(get_string(j.at("penalty"), child(path, "penalty")),
                              child(path, "penalty"));
  }
  if (j.contains("gamma")) {
    m.gamma = get_double(j.at("gamma"), child(path, "gamma"));
    if (!(m.gamma > 0)) throw ConfigError(child(path, "gamma"), "must be > 0");
  }
  if (j.contains("standardize_mean")) {
    m.standardize_mean = get_bool(j.at("standardize_mean"), child(path, "standardize_mean"));
  }
  if (j.contains("admm")) {
    const std::string ap = child(path, "admm");
    const json& a = j.at("admm");
    check_keys(a, ap, {"rho", "tolerance", "max_iterations", "balance_ratio"});
    if (a.contains("rho")) m.admm.rho = get_double(a.at("rho"), child(ap, "rho"));
    if (a.contains("tolerance")) m.admm.tolerance = get_double(a.at("tolerance"), child(ap, "tolerance"));
    if (a.contains("max_iterations")) {
      m.admm.max_iterations = static_cast<int>(get_count(a.at("max_iterations"), child(ap, "max_iterations")));
    }
    if (a.contains("balance_ratio")) {
      m.admm.balance_ratio = get_double(a.at("balance_ratio"), child(ap, "balance_ratio"));
    }
  }
  if (j.contains("lambda_grid")) {
    const std::string gp = child(path, "lambda_grid");
    const json& g = j.at("lambda_grid");
    check_keys(g, gp, {"points", "c_lo", "c_hi", "values"});
    if (g.contains("points")) p.lambda_grid.points = static_cast<int>(get_count(g.at("points"), child(gp, "points")));
    if (g.contains("c_lo")) p.lambda_grid.c_lo = get_double(g.at("c_lo"), child(gp, "c_lo"));
    if (g.contains("c_hi")) p.lambda_grid.c_hi = get_double(g.at("c_hi"), child(gp, "c_hi"));
    if (g.contains("values")) {
      const json& v = g.at("values");
      if (!v.is_array()) throw ConfigError(child(gp, "values"), "expected an array of numbers");
      p.lambda_grid.explicit_grid.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        p.lambda_grid.explicit_grid.push_back(
            get_double(v[i], child(child(gp, "values"), std::to_string(i))));
      }
    }
  }
  if (j.contains("inner_folds")) {
    p.inner_folds = static_cast<int>(get_count(j.at("inner_folds"), child(path, "inner_folds")));
  }
  if (j.contains("bodnar_target")) {
    const std::string t = get_string(j.at("bodnar_target"), child(path, "bodnar_target"));
    if (t == "identity") {
      p.estimator.bodnar_target.kind = BodnarTargetKind::Identity;
    } else if (t == "diagonal_of_s") {
      p.estimator.bodnar_target.kind = BodnarTargetKind::DiagonalOfS;
    } else {
      throw ConfigError(child(path, "bodnar_target"),
                        "unknown target '" + t + "' (expected identity or diagonal_of_s)");
    }
  }
  if (j.contains("wang_grid_size")) {
    p.estimator.wang_grid_size =
        static_cast<int>(get_count(j.at("wang_grid_size"), child(path, "wang_grid_size")));
  }
  if (j.contains("spd_repair_eps")) {
    p.estimator.spd_repair_eps = get_double(j.at("spd_repair_eps"), child(path, "spd_repair_eps"));
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  return p;
}

SimulateSettings simulate_from_json(const json& j) {
  check_schema_version(j);
  check_keys(j, "",
             {"schema_version", "config_id", "replicates", "seed", "training_sizes",
              "pool_size", "validation_size", "include_full_qda", "include_exact_qda",
              "pipelines", "threads", "output_dir", "output_stem"});
  SimulateSettings s;
  if (j.contains("config_id")) {
    s.config_id = get_int(j.at("config_id"), "/config_id");
    if (s.config_id < 1 || s.config_id > 4) {
      throw ConfigError("/config_id", "unknown configuration " + std::to_string(s.config_id) +
                                          " (expected 1, 2, 3 or 4)");
    }
  }
  if (j.contains("replicates")) s.replicates = static_cast<int>(get_count(j.at("replicates"), "/replicates"));
  if (j.contains("seed")) s.seed = get_seed(j.at("seed"), "/seed");
  if (j.contains("training_sizes")) {
    const json& v = j.at("training_sizes");
    if (!v.is_array() || v.empty()) {
      throw ConfigError("/training_sizes", "expected a non-empty array of \"p+1\", \"2p\", \"6p\"");
    }
    s.training_sizes.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = "/training_sizes/" + std::to_string(i);
      try {
        s.training_sizes.push_back(parse_training_size(get_string(v[i], p)));
      } catch (const InvalidParameter& e) {
        throw ConfigError(p, e.what());
      }
    }
  }
  if (j.contains("pool_size")) s.pool_size = get_count(j.at("pool_size"), "/pool_size");
  if (j.contains("validation_size")) {
    s.validation_size = get_count(j.at("validation_size"), "/validation_size");
  }
  if (j.contains("include_full_qda")) {
    s.include_full_qda = get_bool(j.at("include_full_qda"), "/include_full_qda");
  }
  if (j.contains("include_exact_qda")) {
    s.include_exact_qda = get_bool(j.at("include_exact_qda"), "/include_exact_qda");
  }
  if (j.contains("pipelines")) {
    s.pipelines = pipelines_from_json(j.at("pipelines"), "/pipelines",
                                      default_penalty_for_config(s.config_id));
  }
  if (j.contains("threads")) s.threads = static_cast<int>(get_count(j.at("threads"), "/threads"));
  if (j.contains("output_dir")) s.output_dir = get_string(j.at("output_dir"), "/output_dir");
  if (j.contains("output_stem")) s.output_stem = get_string(j.at("output_stem"), "/output_stem");
  return s;
}

CvSettings cv_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_schema_version(j);
  check_keys(j, "",
             {"schema_version", "data", "name", "label_column", "header", "remove_classes",
              "folds", "repeats", "seed", "standardize", "jitter_sigma", "include_full_qda",
              "pipelines", "threads", "output_dir", "output_stem"});
  CvSettings s;
  if (j.contains("data")) {
    std::filesystem::path p = get_string(j.at("data"), "/data");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    s.data = p.string();
  }
  if (j.contains("name")) s.name = get_string(j.at("name"), "/name");
  if (j.contains("label_column")) {
    const json& v = j.at("label_column");
    if (v.is_number_integer()) {
      const int idx = get_int(v, "/label_column");
      if (idx < 0) throw ConfigError("/label_column", "column index must be >= 0");
      s.label_column = "#" + std::to_string(idx);
    } else {
      s.label_column = get_string(v, "/label_column");
    }
  }
  if (j.contains("header")) s.header = get_bool(j.at("header"), "/header");
  if (j.contains("remove_classes")) {
    const json& v = j.at("remove_classes");
    if (!v.is_array()) throw ConfigError("/remove_classes", "expected an array of class labels");
    for (std::size_t i = 0; i < v.size(); ++i) {
      s.remove_classes.push_back(get_string(v[i], "/remove_classes/" + std::to_string(i)));
    }
  }
  if (j.contains("folds")) s.folds = static_cast<int>(get_count(j.at("folds"), "/folds"));
  if (j.contains("repeats")) s.repeats = static_cast<int>(get_count(j.at("repeats"), "/repeats"));
  if (j.contains("seed")) s.seed = get_seed(j.at("seed"), "/seed");
  if (j.contains("standardize")) s.standardize = get_bool(j.at("standardize"), "/standardize");
  if (j.contains("jitter_sigma") && !j.at("jitter_sigma").is_null()) {
    s.jitter_sigma = get_double(j.at("jitter_sigma"), "/jitter_sigma");
  }
  if (j.contains("include_full_qda")) {
    s.include_full_qda = get_bool(j.at("include_full_qda"), "/include_full_qda");
  }
  if (j.contains("pipelines")) {
    s.pipelines = pipelines_from_json(j.at("pipelines"), "/pipelines", MryPenalty::Simple);
  }
  if (j.contains("threads")) s.threads = static_cast<int>(get_count(j.at("threads"), "/threads"));
  if (j.contains("output_dir")) s.output_dir = get_string(j.at("output_dir"), "/output_dir");
  if (j.contains("output_stem")) s.output_stem = get_string(j.at("output_stem"), "/output_stem");
  return s;
}

json to_json(const SimulateSettings& s) {
  json sizes = json::array();
  for (auto t : s.training_sizes) sizes.push_back(to_string(t));
  json pipelines = json::array();
  for (const auto& p : s.pipelines) pipelines.push_back(pipeline_to_json(p));
  json j{{"schema_version", kConfigSchemaVersion},
         {"config_id", s.config_id},
         {"replicates", s.replicates},
         {"training_sizes", sizes},
         {"pool_size", s.pool_size},
         {"validation_size", s.validation_size},
         {"include_full_qda", s.include_full_qda},
         {"include_exact_qda", s.include_exact_qda},
         {"pipelines", pipelines},
         {"output_stem", s.output_stem}};
  if (s.seed) j["seed"] = *s.seed;
  return j;
}

json to_json(const CvSettings& s) {
  json pipelines = json::array();
  for (const auto& p : s.pipelines) pipelines.push_back(pipeline_to_json(p));
  json label;
  if (!s.label_column.empty() && s.label_column[0] == '#') {
    label = std::stoi(s.label_column.substr(1));
  } else {
    label = s.label_column;
  }
  json j{{"schema_version", kConfigSchemaVersion},
         {"data", s.data},
         {"name", s.name},
         {"label_column", label},
         {"header", s.header},
         {"remove_classes", s.remove_classes},
         {"folds", s.folds},
         {"repeats", s.repeats},
         {"standardize", s.standardize},
         {"jitter_sigma", s.jitter_sigma ? json(*s.jitter_sigma) : json(nullptr)},
         {"include_full_qda", s.include_full_qda},
         {"pipelines", pipelines},
         {"output_stem", s.output_stem}};
  if (s.seed) j["seed"] = *s.seed;
  return j;
}

void finalize(SimulateSettings& s, const std::string& default_stem) {
  if (s.config_id < 1 || s.config_id > 4) {
    throw ConfigError("/config_id", "unknown configuration " + std::to_string(s.config_id) +
                                        " (expected 1, 2, 3 or 4)");
  }
  if (!s.seed) {
    s.seed = fresh_seed();
    std::cerr << "seed: " << *s.seed << " (generated)\n";
  }
  finalize_pipelines(s.pipelines, default_penalty_for_config(s.config_id), "/pipelines");
  if (s.output_stem.empty()) s.output_stem = default_stem;
  if (!s.threads) s.threads = default_thread_count();
}

void finalize(CvSettings& s, const std::string& default_stem) {
  if (s.data.empty()) throw ConfigError("/data", "a dataset CSV path is required");
  if (s.label_column.empty()) s.label_column = "#0";
  if (s.name.empty()) s.name = std::filesystem::path(s.data).stem().string();
  if (s.folds < 2) throw ConfigError("/folds", "must be >= 2");
  if (s.jitter_sigma && !(*s.jitter_sigma > 0)) throw ConfigError("/jitter_sigma", "must be > 0");
  if (!s.seed) {
    s.seed = fresh_seed();
    std::cerr << "seed: " << *s.seed << " (generated)\n";
  }
  finalize_pipelines(s.pipelines, MryPenalty::Simple, "/pipelines");
  if (s.output_stem.empty()) s.output_stem = default_stem.empty() ? s.name : default_stem;
  if (!s.threads) s.threads = default_thread_count();
}

}  // namespace ssdr::cli
