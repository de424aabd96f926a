#pragma once

#include "ssdr/numerics.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ssdr {

/// Feature matrix (n x p) with integer labels in 0..k-1. Every class has at
/// least one observation and features are NaN-free.
class LabeledDataset {
public:
  LabeledDataset() = default;
  LabeledDataset(Matrix features, std::vector<int> labels,
                 std::vector<std::string> class_names = {});

  Eigen::Index n() const noexcept { return features_.rows(); }
  Eigen::Index p() const noexcept { return features_.cols(); }
  int k() const noexcept { return k_; }

  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  /// Original label text for each class id; defaults to the id itself.
  const std::vector<std::string>& class_names() const noexcept {
    return class_names_;
  }
  std::vector<std::size_t> class_counts() const;

  /// Rows selected by index, keeping class ids and names.
  LabeledDataset subset(const std::vector<std::size_t>& rows) const;
  LabeledDataset with_features(Matrix features) const;

private:
  Matrix features_;
  std::vector<int> labels_;
  std::vector<std::string> class_names_;
  int k_ = 0;
};

struct ClassSummary {
  int class_id = 0;
  std::size_t n = 0;
  Vector mean;
  SymMatrix cov;
  double prior = 0.0;
};

enum class PriorKind { Proportional, Equal, Explicit };

struct PriorPolicy {
  PriorKind kind = PriorKind::Proportional;
  std::vector<double> weights;  // Explicit only; normalized to sum 1

  static PriorPolicy proportional() { return {}; }
  static PriorPolicy equal() { return {PriorKind::Equal, {}}; }
  static PriorPolicy explicit_weights(std::vector<double> w) {
    return {PriorKind::Explicit, std::move(w)};
  }
};

enum class CovDivisor { MaximumLikelihood, Unbiased };

/// Per-class mean, covariance (divisor n_i by default) and prior.
std::vector<ClassSummary> summarize(
    const LabeledDataset& ds, const PriorPolicy& priors = {},
    CovDivisor divisor = CovDivisor::MaximumLikelihood);

/// Per-feature centering and scaling learned from a training set.
struct Standardizer {
  Vector center;
  Vector scale;

  static Standardizer fit(const LabeledDataset& train);
  LabeledDataset apply(const LabeledDataset& ds) const;
};

/// Studentizes both sets with statistics from `train` only (sd divisor n-1).
std::pair<LabeledDataset, LabeledDataset> standardize(
    const LabeledDataset& train, const LabeledDataset& apply_to);

/// Adds iid N(0, sigma^2) noise to every feature entry.
LabeledDataset jitter(const LabeledDataset& ds, double sigma,
                      std::uint64_t seed);

/// Drops the named classes and renumbers the remainder by original order.
LabeledDataset remove_classes(const LabeledDataset& ds,
                              const std::vector<std::string>& class_names);

struct CsvSchema {
  std::variant<std::string, std::size_t> label_column = std::size_t{0};
  bool header = true;
  /// Explicit label text -> class id. Labels outside the map are an error.
  std::optional<std::map<std::string, int>> class_label_map;
};

LabeledDataset load_csv(const std::filesystem::path& path,
                        const CsvSchema& schema);

/// Writes features then a trailing `label` column holding class names.
void write_csv(const LabeledDataset& ds, const std::filesystem::path& path);

}  // namespace ssdr
