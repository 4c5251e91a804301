#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "sobolrf/config.hpp"
#include "sobolrf/dataset.hpp"
#include "sobolrf/errors.hpp"
#include "sobolrf/rng.hpp"
#include "test_util.hpp"

using namespace sobolrf;

TEST(Csv, HeaderAndNamedTarget) {
  const Dataset d = parse_csv("a,b,y\n1,2,3\n4,5,6\n7,8,9\n", std::string("y"));
  EXPECT_EQ(d.n(), 3u);
  EXPECT_EQ(d.p(), 2u);
  EXPECT_EQ(d.feature_names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.x(1, 0), 4.0);
  EXPECT_EQ(d.x(2, 1), 8.0);
  EXPECT_EQ(d.y(2), 9.0);
}

TEST(Csv, TargetByIndex) {
  const Dataset d = parse_csv("a,b,y\n1,2,3\n4,5,6\n7,8,9\n", std::size_t{0});
  EXPECT_EQ(d.feature_names(), (std::vector<std::string>{"b", "y"}));
  EXPECT_EQ(d.y(0), 1.0);
  EXPECT_EQ(d.y(2), 7.0);
  EXPECT_EQ(d.x(0, 1), 3.0);
}

TEST(Csv, NanCellNamesRowAndColumn) {
  try {
    parse_csv("a,b,y\n1,2,3\n4,NaN,6\n", std::string("y"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("b"), std::string::npos) << msg;
  }
}

TEST(Csv, RejectsRaggedRowsAndMissingTarget) {
  EXPECT_THROW(parse_csv("a,y\n1,2\n3\n", std::string("y")), DataError);
  EXPECT_THROW(parse_csv("a,y\n1,2\n3,4\n", std::string("z")), DataError);
  EXPECT_THROW(parse_csv("a,y\n1,2\n", std::string("y")), DataError);  // n < 2
}

TEST(Csv, RoundTrip) {
  const Dataset d = fixtures::uniform_data(20, 3, 5, [](const auto& r) { return r[0] - r[2]; });
  const auto path = fixtures::tmp_path("roundtrip.csv");
  write_csv(d, path);
  const Dataset back = load_csv(path, std::string("y"));
  ASSERT_EQ(back.n(), d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    EXPECT_EQ(back.y(i), d.y(i));
    for (std::size_t j = 0; j < d.p(); ++j) EXPECT_EQ(back.x(i, j), d.x(i, j));
  }
}

TEST(DatasetOps, ValidatesShape) {
  EXPECT_THROW(Dataset({{1.0, 2.0}}, {1.0}), DataError);
  EXPECT_THROW(Dataset({{1.0}}, {1.0}), DataError);
  EXPECT_THROW(Dataset({{1.0, INFINITY}}, {1.0, 2.0}), DataError);
}

TEST(DatasetOps, SelectAndVariance) {
  const Dataset d({{1, 2, 3, 4}, {5, 6, 7, 8}}, {1, 2, 3, 4});
  const std::vector<std::size_t> rows{3, 0};
  const Dataset s = d.select_rows(rows);
  EXPECT_EQ(s.x(0, 1), 8.0);
  EXPECT_EQ(s.y(1), 1.0);
  const Dataset c = d.drop_column(0);
  EXPECT_EQ(c.p(), 1u);
  EXPECT_EQ(c.feature_names()[0], "X2");
  EXPECT_DOUBLE_EQ(d.response_variance(), 5.0 / 3.0);
}

TEST(RngStreams, SplitIsDeterministic) {
  const auto a = Rng(1).split(2);
  const auto b = Rng(1).split(2);
  for (std::size_t k = 0; k < 2; ++k) {
    Rng x = a[k], y = b[k];
    for (int t = 0; t < 100; ++t) EXPECT_EQ(x.next_u64(), y.next_u64());
  }
}

TEST(RngStreams, StreamsDiffer) {
  Rng s0 = Rng(1).stream(0), s1 = Rng(1).stream(1);
  int equal = 0;
  for (int t = 0; t < 1000; ++t) equal += s0.next_u64() == s1.next_u64();
  EXPECT_EQ(equal, 0);
}

TEST(RngStreams, IndexAddressed) {
  Rng a = Rng(1).split(3)[2];
  Rng b = Rng(1).split(5)[2];
  for (int t = 0; t < 100; ++t) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStreams, SamplingHelpers) {
  Rng rng(9);
  auto s = rng.sample_without_replacement(10, 7);
  std::sort(s.begin(), s.end());
  EXPECT_EQ(std::unique(s.begin(), s.end()), s.end());
  EXPECT_LT(s.back(), 10u);
  double sum = 0.0;
  for (int t = 0; t < 20000; ++t) sum += rng.uniform();
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(Config, ResolveDefaults) {
  const ForestConfig c = ForestConfig{}.resolve(100, 7);
  EXPECT_EQ(c.mtry, 3u);
  EXPECT_EQ(c.subsample_size, 64u);
  EXPECT_GE(c.max_leaves, 100u);
}

TEST(Config, RejectsBadValues) {
  ForestConfig c;
  c.mtry = 9;
  EXPECT_THROW(c.resolve(100, 7), ConfigError);
  c = {};
  c.subsample_size = 200;
  EXPECT_THROW(c.resolve(100, 7), ConfigError);
  c = {};
  c.subsample_size = 99;
  EXPECT_THROW(c.require_oob(100), ConfigError);
  c = {};
  c.max_leaves = 1;
  EXPECT_THROW(c.resolve(100, 7), ConfigError);
  c = {};
  c.gamma = 0.7;
  EXPECT_THROW(c.resolve(100, 7), ConfigError);
}

TEST(Config, JsonRoundTripAndUnknownField) {
  ForestConfig c;
  c.n_trees = 17;
  c.gamma = 0.1;
  c.seed = 42;
  const nlohmann::json j = c;
  const ForestConfig back = j.get<ForestConfig>();
  EXPECT_EQ(back.n_trees, 17u);
  EXPECT_EQ(back.gamma, 0.1);
  EXPECT_EQ(back.seed, 42u);
  nlohmann::json bad = j;
  bad["trees"] = 3;
  EXPECT_THROW(bad.get<ForestConfig>(), ConfigError);
}
