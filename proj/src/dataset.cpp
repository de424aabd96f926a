#include "ssdr/dataset.hpp"

#include "ssdr/errors.hpp"
#include "ssdr/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace ssdr {

LabeledDataset::LabeledDataset(Matrix features, std::vector<int> labels,
                               std::vector<std::string> class_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      class_names_(std::move(class_names)) {
  if (static_cast<Eigen::Index>(labels_.size()) != features_.rows()) {
    throw InvalidInput("dataset: labels length " +
                       std::to_string(labels_.size()) + " != rows " +
                       std::to_string(features_.rows()));
  }
  if (features_.hasNaN()) throw InvalidInput("dataset: NaN feature value");
  int max_label = -1;
  for (int y : labels_) {
    if (y < 0) throw InvalidInput("dataset: negative class label");
    max_label = std::max(max_label, y);
  }
  k_ = std::max(max_label + 1, static_cast<int>(class_names_.size()));
  std::vector<std::size_t> counts(static_cast<std::size_t>(k_), 0);
  for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
  for (int c = 0; c < k_; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw InvalidInput("dataset: class " + std::to_string(c) +
                         " has no observations");
    }
  }
  if (class_names_.empty()) {
    for (int c = 0; c < k_; ++c) class_names_.push_back(std::to_string(c));
  }
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(k_), 0);
  for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

LabeledDataset LabeledDataset::subset(
    const std::vector<std::size_t>& rows) const {
  Matrix x(static_cast<Eigen::Index>(rows.size()), p());
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
        features_.row(static_cast<Eigen::Index>(rows[i]));
    y[i] = labels_[rows[i]];
  }
  LabeledDataset out;
  out.features_ = std::move(x);
  out.labels_ = std::move(y);
  out.class_names_ = class_names_;
  out.k_ = k_;
  return out;
}

LabeledDataset LabeledDataset::with_features(Matrix features) const {
  if (features.rows() != n()) {
    throw InvalidInput("dataset: replacement features have wrong row count");
  }
  LabeledDataset out = *this;
  out.features_ = std::move(features);
  return out;
}

std::vector<ClassSummary> summarize(const LabeledDataset& ds,
                                    const PriorPolicy& priors,
                                    CovDivisor divisor) {
  const int k = ds.k();
  const Eigen::Index p = ds.p();
  const auto counts = ds.class_counts();
  for (int c = 0; c < k; ++c) {
    const auto nc = counts[static_cast<std::size_t>(c)];
    if (nc < 2) {
      throw InsufficientClassSize(
          c, nc,
          "class " + ds.class_names()[static_cast<std::size_t>(c)] + " has " +
              std::to_string(nc) + " observation(s); at least 2 are required");
    }
  }

  std::vector<Vector> sums(static_cast<std::size_t>(k), Vector::Zero(p));
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    sums[static_cast<std::size_t>(ds.labels()[static_cast<std::size_t>(i)])] +=
        ds.features().row(i).transpose();
  }
  std::vector<Vector> means(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    means[static_cast<std::size_t>(c)] =
        sums[static_cast<std::size_t>(c)] /
        static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }
  std::vector<Matrix> scatter(static_cast<std::size_t>(k), Matrix::Zero(p, p));
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels()[static_cast<std::size_t>(i)]);
    const Vector d = ds.features().row(i).transpose() - means[c];
    scatter[c].selfadjointView<Eigen::Lower>().rankUpdate(d);
  }

  std::vector<double> prior(static_cast<std::size_t>(k));
  switch (priors.kind) {
    case PriorKind::Proportional:
      for (int c = 0; c < k; ++c) {
        prior[static_cast<std::size_t>(c)] =
            static_cast<double>(counts[static_cast<std::size_t>(c)]) /
            static_cast<double>(ds.n());
      }
      break;
    case PriorKind::Equal:
      std::fill(prior.begin(), prior.end(), 1.0 / k);
      break;
    case PriorKind::Explicit: {
      if (priors.weights.size() != static_cast<std::size_t>(k)) {
        throw InvalidParameter("explicit priors: expected " +
                               std::to_string(k) + " weights");
      }
      const double total =
          std::accumulate(priors.weights.begin(), priors.weights.end(), 0.0);
      for (std::size_t c = 0; c < prior.size(); ++c) {
        if (!(priors.weights[c] > 0.0)) {
          throw InvalidParameter("explicit priors must be positive");
        }
        prior[c] = priors.weights[c] / total;
      }
      break;
    }
  }

  std::vector<ClassSummary> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    const double nc = static_cast<double>(counts[uc]);
    const double div = divisor == CovDivisor::MaximumLikelihood ? nc : nc - 1.0;
    Matrix cov = scatter[uc].selfadjointView<Eigen::Lower>();
    out.push_back(ClassSummary{c, counts[uc], means[uc],
                               SymMatrix(cov / div), prior[uc]});
  }
  return out;
}

Standardizer Standardizer::fit(const LabeledDataset& train) {
  if (train.n() < 2) throw InvalidInput("standardize: need at least 2 rows");
  Standardizer s;
  s.center = train.features().colwise().mean().transpose();
  const Matrix centered = train.features().rowwise() - s.center.transpose();
  s.scale = (centered.colwise().squaredNorm().transpose() /
             static_cast<double>(train.n() - 1))
                .cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 0.0)) {
      throw DegenerateFeature(static_cast<std::size_t>(j),
                              "feature column " + std::to_string(j) +
                                  " has zero variance; enable jitter");
    }
  }
  return s;
}

LabeledDataset Standardizer::apply(const LabeledDataset& ds) const {
  if (ds.p() != center.size()) throw InvalidInput("standardize: dimension mismatch");
  Matrix x = (ds.features().rowwise() - center.transpose()).array().rowwise() /
             scale.transpose().array();
  return ds.with_features(std::move(x));
}

std::pair<LabeledDataset, LabeledDataset> standardize(
    const LabeledDataset& train, const LabeledDataset& apply_to) {
  const Standardizer s = Standardizer::fit(train);
  return {s.apply(train), s.apply(apply_to)};
}

LabeledDataset jitter(const LabeledDataset& ds, double sigma,
                      std::uint64_t seed) {
  if (!(sigma > 0.0)) throw InvalidParameter("jitter: sigma must be > 0");
  Rng rng = make_rng(seed, {0x6a17});
  std::normal_distribution<double> noise(0.0, sigma);
  Matrix x = ds.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) += noise(rng);
  }
  return ds.with_features(std::move(x));
}

LabeledDataset remove_classes(const LabeledDataset& ds,
                              const std::vector<std::string>& class_names) {
  std::vector<int> remap(static_cast<std::size_t>(ds.k()), -1);
  std::vector<std::string> kept_names;
  for (int c = 0; c < ds.k(); ++c) {
    const auto& name = ds.class_names()[static_cast<std::size_t>(c)];
    if (std::find(class_names.begin(), class_names.end(), name) ==
        class_names.end()) {
      remap[static_cast<std::size_t>(c)] = static_cast<int>(kept_names.size());
      kept_names.push_back(name);
    }
  }
  for (const auto& name : class_names) {
    if (std::find(ds.class_names().begin(), ds.class_names().end(), name) ==
        ds.class_names().end()) {
      throw InvalidParameter("remove_classes: unknown class '" + name + "'");
    }
  }
  std::vector<std::size_t> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < ds.labels().size(); ++i) {
    const int m = remap[static_cast<std::size_t>(ds.labels()[i])];
    if (m >= 0) {
      rows.push_back(i);
      labels.push_back(m);
    }
  }
  const LabeledDataset kept = ds.subset(rows);
  return LabeledDataset(kept.features(), std::move(labels),
                        std::move(kept_names));
}

namespace {

struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// RFC-4180 style: quoted fields, doubled quotes, CRLF or LF line endings.
std::vector<CsvRecord> parse_csv(const std::string& text) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  std::size_t line = 1;
  current.line = line;
  bool in_quotes = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        any = true;
        break;
      case ',':
        current.fields.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty()) {
          current.fields.push_back(std::move(field));
          records.push_back(std::move(current));
        }
        field.clear();
        current = CsvRecord{};
        current.line = ++line;
        any = false;
        break;
      default:
        field.push_back(ch);
        any = true;
    }
  }
  if (in_quotes) throw ParseError(line, "unterminated quoted field at line " + std::to_string(line));
  if (any || !field.empty()) {
    current.fields.push_back(std::move(field));
    records.push_back(std::move(current));
  }
  return records;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& raw, double& out) {
  const std::string s = trim(raw);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() &&
         std::isfinite(out);
}

}  // namespace

LabeledDataset load_csv(const std::filesystem::path& path,
                        const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open CSV file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::vector<CsvRecord> records = parse_csv(buf.str());
  if (records.empty()) throw ParseError(1, path.string() + ": empty CSV file");

  const std::size_t width = records.front().fields.size();
  std::size_t label_col = 0;
  std::size_t first_data = 0;
  if (schema.header) {
    first_data = 1;
    if (const auto* name = std::get_if<std::string>(&schema.label_column)) {
      const auto& hdr = records.front().fields;
      auto it = std::find_if(hdr.begin(), hdr.end(), [&](const std::string& h) {
        return trim(h) == *name;
      });
      if (it == hdr.end()) {
        throw ParseError(1, path.string() + ": label column '" + *name +
                                "' not found in header");
      }
      label_col = static_cast<std::size_t>(it - hdr.begin());
    } else {
      label_col = std::get<std::size_t>(schema.label_column);
    }
  } else {
    if (std::holds_alternative<std::string>(schema.label_column)) {
      throw InvalidParameter("label column by name requires a header row");
    }
    label_col = std::get<std::size_t>(schema.label_column);
  }
  if (label_col >= width) {
    throw ParseError(1, path.string() + ": label column index " +
                            std::to_string(label_col) + " out of range");
  }

  const std::size_t n = records.size() - first_data;
  if (n == 0) throw ParseError(1, path.string() + ": no data rows");
  const auto p = static_cast<Eigen::Index>(width - 1);
  Matrix x(static_cast<Eigen::Index>(n), p);
  std::vector<int> labels(n);
  std::vector<std::string> names;
  std::unordered_map<std::string, int> seen;
  if (schema.class_label_map) {
    int k = 0;
    for (const auto& [label, id] : *schema.class_label_map) k = std::max(k, id + 1);
    names.assign(static_cast<std::size_t>(k), std::string{});
    for (const auto& [label, id] : *schema.class_label_map) {
      if (id < 0) throw InvalidParameter("class label map ids must be >= 0");
      names[static_cast<std::size_t>(id)] = label;
      seen.emplace(label, id);
    }
  }

  for (std::size_t r = 0; r < n; ++r) {
    const CsvRecord& rec = records[r + first_data];
    if (rec.fields.size() != width) {
      throw ParseError(rec.line, path.string() + ":" + std::to_string(rec.line) +
                                     ": expected " + std::to_string(width) +
                                     " fields, found " +
                                     std::to_string(rec.fields.size()));
    }
    Eigen::Index col = 0;
    for (std::size_t f = 0; f < width; ++f) {
      if (f == label_col) continue;
      double v = 0.0;
      if (!parse_double(rec.fields[f], v)) {
        throw ParseError(rec.line, path.string() + ":" +
                                       std::to_string(rec.line) +
                                       ": cannot parse numeric value '" +
                                       rec.fields[f] + "' in column " +
                                       std::to_string(f));
      }
      x(static_cast<Eigen::Index>(r), col++) = v;
    }
    const std::string label = trim(rec.fields[label_col]);
    auto it = seen.find(label);
    if (it == seen.end()) {
      if (schema.class_label_map) {
        throw ParseError(rec.line, path.string() + ":" +
                                       std::to_string(rec.line) +
                                       ": unknown class label '" + label + "'");
      }
      it = seen.emplace(label, static_cast<int>(names.size())).first;
      names.push_back(label);
    }
    labels[r] = it->second;
  }
  return LabeledDataset(std::move(x), std::move(labels), std::move(names));
}

void write_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write CSV file: " + path.string());
  for (Eigen::Index j = 0; j < ds.p(); ++j) out << 'x' << (j + 1) << ',';
  out << "label\n";
  char buf[64];
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.p(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, ds.features()(i, j));
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    std::string name =
        ds.class_names()[static_cast<std::size_t>(ds.labels()[static_cast<std::size_t>(i)])];
    if (name.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : name) {
        if (ch == '"') quoted.push_back('"');
        quoted.push_back(ch);
      }
      name = quoted + "\"";
    }
    out << name << '\n';
  }
}

}  // namespace ssdr
