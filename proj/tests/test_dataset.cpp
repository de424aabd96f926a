#include "ssdr/dataset.hpp"
#include "ssdr/errors.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace ssdr;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "ssdr_tests";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << body;
  return p;
}

LabeledDataset small_set() {
  Matrix x(6, 2);
  x << 1, 2, 2, 1, 3, 3, 10, 0, 11, 1, 12, -1;
  return LabeledDataset(x, {0, 0, 0, 1, 1, 1}, {"a", "b"});
}

}  // namespace

TEST(Dataset, RejectsNaNAndEmptyClass) {
  Matrix x = Matrix::Zero(3, 2);
  x(1, 1) = std::nan("");
  EXPECT_THROW(LabeledDataset(x, {0, 0, 1}), InvalidInput);
  EXPECT_THROW(LabeledDataset(Matrix::Zero(3, 2), {0, 0, 2}), InvalidInput);
}

TEST(Summarize, MleDivisorAndPriors) {
  const auto s = summarize(small_set());
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0].mean(0), 2.0, 1e-15);
  // divisor n_i: var of {1,2,3} is 2/3
  EXPECT_NEAR(s[0].cov(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[0].prior, 0.5, 1e-15);
  const auto u = summarize(small_set(), {}, CovDivisor::Unbiased);
  EXPECT_NEAR(u[0].cov(0, 0), 1.0, 1e-15);
}

TEST(Summarize, PriorPolicies) {
  Matrix x(5, 1);
  x << 0, 1, 2, 5, 6;
  const LabeledDataset ds(x, {0, 0, 0, 1, 1});
  EXPECT_NEAR(summarize(ds)[0].prior, 0.6, 1e-15);
  EXPECT_NEAR(summarize(ds, PriorPolicy::equal())[0].prior, 0.5, 1e-15);
  EXPECT_NEAR(summarize(ds, PriorPolicy::explicit_weights({1.0, 3.0}))[1].prior, 0.75, 1e-15);
  EXPECT_THROW(summarize(ds, PriorPolicy::explicit_weights({1.0})), InvalidParameter);
}

TEST(Summarize, SingletonClassIsAnError) {
  Matrix x(3, 1);
  x << 0, 1, 2;
  try {
    summarize(LabeledDataset(x, {0, 0, 1}));
    FAIL();
  } catch (const InsufficientClassSize& e) {
    EXPECT_EQ(e.class_id(), 1);
    EXPECT_EQ(e.size(), 1u);
  }
}

TEST(Standardize, UsesTrainingStatisticsOnly) {
  const LabeledDataset train = small_set();
  Matrix xt(2, 2);
  xt << 100, 100, -100, -100;
  const LabeledDataset test(xt, {0, 1}, {"a", "b"});
  const auto [tr, te] = standardize(train, test);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const Vector col = tr.features().col(j);
    EXPECT_NEAR(col.mean(), 0.0, 1e-14);
    const double var = (col.array() - col.mean()).square().sum() / (col.size() - 1);
    EXPECT_NEAR(var, 1.0, 1e-14);
  }
  const Standardizer st = Standardizer::fit(train);
  EXPECT_NEAR(te.features()(0, 0), (100.0 - st.center(0)) / st.scale(0), 1e-12);
}

TEST(Standardize, ConstantFeatureIsDegenerate) {
  Matrix x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const LabeledDataset ds(x, {0, 0, 1, 1});
  try {
    Standardizer::fit(ds);
    FAIL();
  } catch (const DegenerateFeature& e) {
    EXPECT_EQ(e.column(), 1u);
  }
}

TEST(Jitter, DeterministicAndSmall) {
  const LabeledDataset ds = small_set();
  const auto a = jitter(ds, 1e-5, 42);
  const auto b = jitter(ds, 1e-5, 42);
  EXPECT_EQ(a.features(), b.features());
  EXPECT_LE((a.features() - ds.features()).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_NE(a.features(), jitter(ds, 1e-5, 43).features());
  EXPECT_THROW(jitter(ds, 0.0, 1), InvalidParameter);
}

TEST(RemoveClasses, RenumbersRemainder) {
  Matrix x(6, 1);
  x << 0, 1, 2, 3, 4, 5;
  const LabeledDataset ds(x, {0, 0, 1, 1, 2, 2}, {"omL", "cp", "imS"});
  const auto r = remove_classes(ds, {"omL"});
  EXPECT_EQ(r.k(), 2);
  EXPECT_EQ(r.n(), 4);
  EXPECT_EQ(r.class_names()[0], "cp");
  EXPECT_EQ(r.labels()[0], 0);
  EXPECT_THROW(remove_classes(ds, {"nope"}), InvalidParameter);
}

TEST(Csv, LoadByNameWithQuotedFields) {
  const auto p = temp_file("quoted.csv",
                           "x1,\"label, text\",x2\n"
                           "1.5,\"setosa, big\",2\n"
                           "2.5,virginica,-1e-3\n"
                           "3.5,\"setosa, big\",4\n");
  CsvSchema schema;
  schema.label_column = std::string("label, text");
  const auto ds = load_csv(p, schema);
  EXPECT_EQ(ds.n(), 3);
  EXPECT_EQ(ds.p(), 2);
  EXPECT_EQ(ds.k(), 2);
  EXPECT_EQ(ds.class_names()[0], "setosa, big");
  EXPECT_DOUBLE_EQ(ds.features()(1, 1), -1e-3);
}

TEST(Csv, ParseErrorsCarryLine) {
  const auto p = temp_file("bad.csv", "a,b,y\n1,2,u\n1,oops,v\n");
  CsvSchema schema;
  schema.label_column = std::size_t{2};
  try {
    load_csv(p, schema);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("oops"), std::string::npos);
  }
  const auto ragged = temp_file("ragged.csv", "a,b,y\n1,2,u\n1,v\n");
  EXPECT_THROW(load_csv(ragged, schema), ParseError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", schema), InvalidInput);
}

TEST(Csv, ExplicitLabelMap) {
  const auto p = temp_file("mapped.csv", "y,a\nB,1\nA,2\nB,3\nA,4\n");
  CsvSchema schema;
  schema.class_label_map = std::map<std::string, int>{{"A", 0}, {"B", 1}};
  const auto ds = load_csv(p, schema);
  EXPECT_EQ(ds.labels()[0], 1);
  EXPECT_EQ(ds.class_names()[0], "A");
  const auto bad = temp_file("mapped_bad.csv", "y,a\nB,1\nC,2\n");
  EXPECT_THROW(load_csv(bad, schema), ParseError);
}

TEST(Csv, RoundTripIsExact) {
  Rng rng(17);
  const Matrix x = ssdr::testing::gaussian_matrix(20, 4, rng) * 1e3;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) labels.push_back(i % 3);
  const LabeledDataset ds(x, labels, {"alpha", "beta", "gamma"});
  const fs::path p = fs::temp_directory_path() / "ssdr_tests" / "roundtrip.csv";
  fs::create_directories(p.parent_path());
  write_csv(ds, p);
  CsvSchema schema;
  schema.label_column = std::string("label");
  const auto back = load_csv(p, schema);
  EXPECT_EQ(back.features(), ds.features());
  EXPECT_EQ(back.labels(), ds.labels());
  EXPECT_EQ(back.class_names(), ds.class_names());
}
