#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include <gtest/gtest.h>

#include "sparsenorm/datasets.hpp"
#include "support/temp_dir.hpp"

namespace sparsenorm {
namespace {

using testing::TempDir;

bool triple_less(const RatingTriple& a, const RatingTriple& b) {
  return std::tie(a.user_id, a.item_id, a.rating, a.timestamp) < std::tie(b.user_id, b.item_id, b.rating, b.timestamp);
}

std::vector<RatingTriple> synthetic_ratings(std::size_t n) {
  std::vector<RatingTriple> r;
  for (std::size_t i = 0; i < n; ++i)
    r.push_back({static_cast<std::int64_t>(i % 37 + 1), static_cast<std::int64_t>(i % 53 + 1),
                 static_cast<double>(i % 5 + 1), static_cast<std::int64_t>(i)});
  return r;
}

TEST(LoadMovielens, ParsesLine) {
  TempDir dir;
  auto p = dir.write("u.data", "1\t1\t5\t874965758\n3\t7\t2\t1\n");
  auto d = load_movielens(p);
  ASSERT_EQ(d.ratings.size(), 2u);
  EXPECT_EQ(d.ratings[0], (RatingTriple{1, 1, 5.0, 874965758}));
  EXPECT_EQ(d.users, 3u);
  EXPECT_EQ(d.items, 7u);
}

TEST(LoadMovielens, ErrorsCarryLineNumber) {
  TempDir dir;
  auto p = dir.write("bad", "1\t1\t5\t1\n2\tx\t3\t1\n");
  try {
    load_movielens(p);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(load_movielens(dir.write("short", "1\t2\t3\n")), ParseError);
  EXPECT_THROW(load_movielens(dir.write("empty", "")), std::invalid_argument);
  EXPECT_THROW(load_movielens(dir.file("absent")), std::invalid_argument);
}

TEST(LoadMovielens, FullFile) {
  auto p = testing::data_path("ml-100k/u.data");
  if (!testing::file_exists(p)) GTEST_SKIP() << "MovieLens data not present";
  auto d = load_movielens(p, Encoding::item_vector);
  EXPECT_EQ(d.ratings.size(), 100000u);
  EXPECT_EQ(d.users, 943u);
  EXPECT_EQ(d.items, 1682u);
  auto ds = ratings_to_masked(d.ratings, d.encoding, d.users, d.items);
  EXPECT_EQ(ds.data.size(), 1682u);
  EXPECT_EQ(ds.data.feature_dim(), 943u);
  EXPECT_EQ(ds.duplicates, 0u);
}

TEST(SplitRatings, CountsDeterminismPartition) {
  auto r = synthetic_ratings(100000);
  auto [train, test] = split_ratings(r, 0.1, 42);
  EXPECT_EQ(test.size(), 10000u);
  EXPECT_EQ(train.size(), 90000u);
  auto again = split_ratings(r, 0.1, 42);
  EXPECT_EQ(again.first, train);
  EXPECT_EQ(again.second, test);
  EXPECT_NE(split_ratings(r, 0.1, 43).second, test);

  std::vector<RatingTriple> all = train;
  all.insert(all.end(), test.begin(), test.end());
  std::sort(all.begin(), all.end(), triple_less);
  std::sort(r.begin(), r.end(), triple_less);
  EXPECT_EQ(all, r);
  EXPECT_THROW(split_ratings(r, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(split_ratings(r, 1.0, 1), std::invalid_argument);
}

TEST(RatingsToMasked, SingleTripleAndEmptyUser) {
  auto ds = ratings_to_masked({{1, 2, 4.0, 0}}, Encoding::user_vector, 2, 3).data;
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].values(), Eigen::Vector3d(0, 4, 0));
  EXPECT_EQ(ds[0].mask(), Eigen::Vector3d(0, 1, 0));
  EXPECT_EQ(ds[1].mask(), Eigen::Vector3d::Zero());
  EXPECT_DOUBLE_EQ(ds.K(), 0.5);
}

TEST(RatingsToMasked, DuplicatesLastWriteWins) {
  auto out = ratings_to_masked({{1, 1, 2.0, 0}, {1, 1, 5.0, 0}}, Encoding::user_vector, 1, 1);
  EXPECT_EQ(out.duplicates, 1u);
  EXPECT_EQ(out.data[0].values()(0), 5.0);
  EXPECT_THROW(ratings_to_masked({{2, 1, 1.0, 0}}, Encoding::user_vector, 1, 1), std::invalid_argument);
}

TEST(RatingsToMasked, ConservationAndRoundTrip) {
  auto r = synthetic_ratings(1000);
  // synthetic ids repeat with period lcm(37, 53) > 1000, so no duplicates
  for (auto enc : {Encoding::user_vector, Encoding::item_vector}) {
    auto out = ratings_to_masked(r, enc, 37, 53);
    EXPECT_EQ(out.duplicates, 0u);
    EXPECT_DOUBLE_EQ(out.data.observed_total(), 1000.0);
    auto back = masked_to_ratings(out.data, enc);
    std::vector<RatingTriple> expected = r;
    for (auto& t : expected) t.timestamp = 0;
    std::sort(back.begin(), back.end(), triple_less);
    std::sort(expected.begin(), expected.end(), triple_less);
    EXPECT_EQ(back, expected);
  }
}

TEST(McarMask, RateZeroDeterminismConcentration) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(1000, 20);
  auto full = mcar_mask(x, 0.0, 1);
  EXPECT_DOUBLE_EQ(full.observed_total(), 20000.0);
  EXPECT_EQ(full[3].values(), x.row(3).transpose());

  auto half = mcar_mask(x, 0.5, 9);
  const double n = 20000.0;
  const double frac = half.observed_total() / n;
  EXPECT_LE(std::abs(frac - 0.5), 3.0 * std::sqrt(0.25 / n));
  auto again = mcar_mask(x, 0.5, 9);
  EXPECT_EQ(again.mask_matrix(), half.mask_matrix());
  for (std::size_t i = 0; i < half.size(); ++i)
    for (Eigen::Index j = 0; j < 20; ++j)
      if (half[i].mask()(j) == 1.0) {
        EXPECT_EQ(half[i].values()(j), x(static_cast<Eigen::Index>(i), j));
      }
  EXPECT_THROW(mcar_mask(x, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(mcar_mask(x, -0.1, 1), std::invalid_argument);
}

Dataset column(std::initializer_list<double> v, std::initializer_list<double> m) {
  Dataset d(1);
  auto mi = m.begin();
  for (double x : v) d.add(MaskedInstance(Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, *mi++)));
  return d;
}

TEST(MinMaxScaler, AffineMapNoClippingConstant) {
  auto s = MinMaxScaler::fit(column({2, 4, 100}, {1, 1, 0}));
  EXPECT_DOUBLE_EQ(s.transform(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(s.transform(0, 4), 1.0);
  EXPECT_DOUBLE_EQ(s.transform(0, 3), 0.5);
  EXPECT_DOUBLE_EQ(s.transform(0, 6), 2.0);
  EXPECT_DOUBLE_EQ(s.transform(0, 0), -1.0);

  auto c = MinMaxScaler::fit(column({7, 7}, {1, 1}));
  auto out = c.transform(column({7, 3}, {1, 1}));
  EXPECT_EQ(out[0].values()(0), 0.0);
  EXPECT_EQ(out[1].values()(0), 0.0);

  auto none = MinMaxScaler::fit(column({5}, {0}));
  EXPECT_EQ(none.transform(0, 5), 0.0);
}

TEST(MinMaxScaler, MissingStaysZeroAndTestIsNeverRead) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(50, 4);
  auto train = mcar_mask(x, 0.3, 2);
  auto fitted = MinMaxScaler::fit(train);
  auto test = mcar_mask(Eigen::MatrixXd::Constant(10, 4, 1e12), 0.0, 3);
  auto out = fitted.transform(test);
  auto refit = MinMaxScaler::fit(train);
  EXPECT_EQ(refit.minimum(), fitted.minimum());
  EXPECT_EQ(refit.range(), fitted.range());
  EXPECT_GT(out[0].values()(0), 1.0);
  auto tr = fitted.transform(train);
  for (const auto& inst : tr.instances())
    for (Eigen::Index j = 0; j < 4; ++j) {
      if (inst.mask()(j) == 0.0) EXPECT_EQ(inst.values()(j), 0.0);
      else {
        EXPECT_GE(inst.values()(j), 0.0);
        EXPECT_LE(inst.values()(j), 1.0);
      }
    }
}

std::string idx_file(const std::vector<std::vector<std::uint8_t>>& images, std::uint32_t rows, std::uint32_t cols,
                     std::uint32_t magic = 0x803) {
  std::string s;
  auto be = [&](std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xff));
  };
  be(magic);
  be(static_cast<std::uint32_t>(images.size()));
  be(rows);
  be(cols);
  for (const auto& img : images)
    for (auto p : img) s.push_back(static_cast<char>(p));
  return s;
}

TEST(Mnist, BinarizationExamples) {
  TempDir dir;
  std::vector<std::uint8_t> black(6, 0), white(6, 255), mixed{0, 127, 128, 200, 255, 10};
  auto p = dir.write("img", idx_file({black, white, mixed}, 2, 3));
  auto d = load_mnist_binarized(p, 0.5);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.feature_dim(), 6u);
  EXPECT_EQ(d[0].values(), Eigen::VectorXd::Zero(6));
  EXPECT_EQ(d[0].mask(), Eigen::VectorXd::Zero(6));
  EXPECT_EQ(d[1].mask(), Eigen::VectorXd::Ones(6));
  Eigen::VectorXd expected(6);
  expected << 0, 0, 1, 1, 1, 0;
  EXPECT_EQ(d[2].values(), expected);
  for (const auto& inst : d.instances()) EXPECT_EQ(inst.mask(), inst.values());
  EXPECT_EQ(load_mnist_binarized(p, 0.5, 2).size(), 2u);

  EXPECT_THROW(load_mnist_binarized(dir.write("bad", idx_file({black}, 2, 3, 0x801)), 0.5), ParseError);
  auto truncated = idx_file({black}, 2, 3);
  truncated.pop_back();
  EXPECT_THROW(load_mnist_binarized(dir.write("trunc", truncated), 0.5), ParseError);
}

TEST(Mnist, SubsetFile) {
  auto p = testing::data_path("mnist/mnist5k-images-idx3-ubyte");
  if (!testing::file_exists(p)) GTEST_SKIP() << "MNIST data not present";
  auto d = load_mnist_binarized(p, 0.5);
  EXPECT_EQ(d.size(), 5000u);
  EXPECT_EQ(d.feature_dim(), 784u);
  EXPECT_GT(d.K(), 50.0);
  EXPECT_LT(d.K(), 250.0);
}

TEST(LoadTable, MissingTokenAndTarget) {
  TempDir dir;
  auto p = dir.write("t.csv", "a,y,b\n1,10,2\n,20,3.5\r\n4,30,\n");
  auto t = load_table(p, {',', "", std::string("y")});
  EXPECT_EQ(t.feature_names, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.features.size(), 3u);
  EXPECT_EQ(t.target, Eigen::Vector3d(10, 20, 30));
  EXPECT_EQ(t.features[1].mask(), Eigen::Vector2d(0, 1));
  EXPECT_EQ(t.features[1].values(), Eigen::Vector2d(0, 3.5));
  EXPECT_THROW(load_table(p, {',', "", std::string("z")}), std::invalid_argument);
  EXPECT_EQ(t.features[2].mask(), Eigen::Vector2d(1, 0));

  auto q = dir.write("na.tsv", "a\tb\n1\tNA\n");
  auto u = load_table(q, {'\t', "NA", std::nullopt});
  EXPECT_EQ(u.target.size(), 0);
  EXPECT_EQ(u.features[0].mask(), Eigen::Vector2d(1, 0));

  EXPECT_THROW(load_table(dir.write("bad", "a,b\n1\n"), {}), ParseError);
  EXPECT_THROW(load_table(dir.write("bad2", "a,b\n1,x\n"), {}), ParseError);
  auto sel = select_rows(t, {2, 0});
  EXPECT_EQ(sel.target, Eigen::Vector2d(30, 10));
  EXPECT_EQ(sel.features[0].values(), t.features[2].values());
}

TEST(LoadTable, Diabetes) {
  auto p = testing::data_path("tabular/diabetes.csv");
  if (!testing::file_exists(p)) GTEST_SKIP() << "diabetes data not present";
  auto t = load_table(p, {',', "", std::string("target")});
  EXPECT_EQ(t.features.size(), 442u);
  EXPECT_EQ(t.features.feature_dim(), 10u);
  EXPECT_DOUBLE_EQ(t.features.K(), 10.0);
}

}  // namespace
}  // namespace sparsenorm
