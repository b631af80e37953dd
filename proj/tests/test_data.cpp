#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "localmax/data.hpp"

using namespace localmax;

TEST(Data, GmmCentersAndDefaults) {
  const GmmConfig g;
  EXPECT_EQ(g.grid, (std::vector<double>{-1.5, -0.5, 0.5, 1.5}));
  EXPECT_EQ(g.sigma, 0.01);
  const Matrix c = gmm_centers(g);
  ASSERT_EQ(c.rows(), 16u);
  EXPECT_EQ(c(0, 0), -1.5);
  EXPECT_EQ(c(0, 1), -1.5);
  EXPECT_EQ(c(1, 1), -0.5);
  EXPECT_EQ(c(15, 0), 1.5);
}

TEST(Data, GmmComponentCountsConcentrate) {
  GmmConfig g;
  std::vector<std::size_t> comp;
  const Dataset ds = sample_gmm(g, 16000, 21, &comp);
  std::vector<std::size_t> counts(16, 0);
  for (auto k : comp) ++counts[k];
  // Binomial(16000, 1/16): mean 1000, std ~30.6.
  const double sd = std::sqrt(16000.0 / 16 * (15.0 / 16));
  for (auto n : counts) EXPECT_LE(std::abs(static_cast<double>(n) - 1000.0), 3 * sd);
  const Matrix c = gmm_centers(g);
  for (std::size_t i = 0; i < ds.x.rows(); ++i)
    EXPECT_LT(std::hypot(ds.x(i, 0) - c(comp[i], 0), ds.x(i, 1) - c(comp[i], 1)), 0.07);
}

TEST(Data, GmmReproducible) {
  GmmConfig g;
  EXPECT_EQ(sample_gmm(g, 50, 3).x, sample_gmm(g, 50, 3).x);
  EXPECT_NE(sample_gmm(g, 50, 3).x, sample_gmm(g, 50, 4).x);
}

TEST(Data, BackgroundRespectsDistance) {
  const Matrix centers = gmm_centers(GmmConfig{});
  const Matrix bg = sample_uniform_background(Box{{-2, -2}, {2, 2}}, 512, centers, 0.1, 8);
  ASSERT_EQ(bg.rows(), 512u);
  for (std::size_t i = 0; i < bg.rows(); ++i) {
    EXPECT_GE(bg(i, 0), -2.0);
    EXPECT_LE(bg(i, 1), 2.0);
    for (std::size_t k = 0; k < centers.rows(); ++k)
      EXPECT_GE(std::hypot(bg(i, 0) - centers(k, 0), bg(i, 1) - centers(k, 1)), 0.1);
  }
  EXPECT_THROW(sample_uniform_background(Box{{-2, -2}, {2, 2}}, 10, centers, 100.0, 8), ConfigError);
}

TEST(Data, PointSetGaps) {
  const auto pts = sample_point_set(8, 0.0, 1.0, 0.05, 2);
  ASSERT_EQ(pts.size(), 8u);
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_GE(pts[i] - pts[i - 1], 0.05);
  EXPECT_ANY_THROW(sample_point_set(30, 0.0, 1.0, 0.05, 2));
}

TEST(Data, CsvRoundTripAndErrors) {
  testutil::TempDir dir("csv");
  Dataset ds;
  ds.x = Matrix::from_rows({{0.1, 1.0 / 3.0}, {-2.5e-8, 7.0}});
  ds.feature_names = {"a", "b"};
  write_csv(dir / "d.csv", ds);
  const Dataset back = load_csv(dir / "d.csv");
  EXPECT_EQ(back.x, ds.x);
  EXPECT_EQ(back.feature_names, ds.feature_names);

  {
    std::ofstream(dir / "t.csv", std::ios::binary) << "x,y,t\r\n1,2,3\r\n4,5,6\r\n";
  }
  const Dataset t = load_csv(dir / "t.csv", std::string("t"));
  EXPECT_EQ(t.x, Matrix::from_rows({{1, 2}, {4, 5}}));
  EXPECT_EQ(*t.targets, (std::vector<double>{3, 6}));
  EXPECT_THROW(load_csv(dir / "t.csv", std::string("missing")), ParseError);

  {
    std::ofstream(dir / "bad.csv") << "x,y\n1,2\n3,abc\n";
  }
  try {
    load_csv(dir / "bad.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("abc"), std::string::npos);
  }
  {
    std::ofstream(dir / "ragged.csv") << "x,y\n1,2\n3\n";
  }
  EXPECT_THROW(load_csv(dir / "ragged.csv"), ParseError);
}

TEST(Data, SplitStandardizeUsesTrainStatistics) {
  Dataset ds;
  ds.x = Matrix(100, 2);
  for (std::size_t i = 0; i < 100; ++i) {
    ds.x(i, 0) = static_cast<double>(i);
    ds.x(i, 1) = 5.0; // constant
  }
  std::vector<std::string> warnings;
  const auto [train, test] = split_standardize(ds, 0.8, 1, &warnings);
  EXPECT_EQ(train.x.rows(), 80u);
  EXPECT_EQ(test.x.rows(), 20u);
  ASSERT_TRUE(train.standardization);
  EXPECT_EQ(train.standardization, test.standardization);
  double mean = 0.0;
  for (std::size_t i = 0; i < train.x.rows(); ++i) mean += train.x(i, 0);
  EXPECT_NEAR(mean / 80.0, 0.0, 1e-12);
  for (std::size_t i = 0; i < test.x.rows(); ++i) EXPECT_EQ(test.x(i, 1), 0.0);
  EXPECT_EQ(warnings.size(), 1u);
}
