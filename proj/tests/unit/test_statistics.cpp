#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "qtransport/errors.hpp"
#include "qtransport/histogram.hpp"
#include "qtransport/statistics.hpp"
#include "test_support.hpp"

namespace qtransport {
namespace {

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

TEST(RunningStats, MatchesTwoPass) {
  SampleStream s = test::stream(40);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = s.uniform() * s.uniform();
  RunningStats st;
  for (double x : xs) st.add(x);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  EXPECT_EQ(st.count(), xs.size());
  EXPECT_NEAR(st.mean(), mean, 1e-10);
  EXPECT_NEAR(st.variance(), var, 1e-10);
}

TEST(RunningStats, MergeEqualsSequentialUpToRounding) {
  SampleStream s = test::stream(41);
  RunningStats all, a, b;
  for (int i = 0; i < 5000; ++i) {
    const double x = s.normal();
    all.add(x);
    (i < 1700 ? a : b).add(x);
  }
  a.merge(b);
  EXPECT_EQ(a.count(), all.count());
  EXPECT_NEAR(a.mean(), all.mean(), 1e-13);
  EXPECT_NEAR(a.variance(), all.variance(), 1e-12);
}

TEST(RunningStats, FixedMergeOrderIsReproducible) {
  SampleStream s = test::stream(42);
  std::vector<RunningStats> blocks(8);
  for (auto& blk : blocks) {
    for (int i = 0; i < 100; ++i) blk.add(s.uniform());
  }
  auto fold = [&] {
    RunningStats acc;
    for (const auto& blk : blocks) acc.merge(blk);
    return acc;
  };
  const RunningStats x = fold();
  const RunningStats y = fold();
  EXPECT_TRUE(bitwise_equal(x.mean(), y.mean()));
  EXPECT_TRUE(bitwise_equal(x.variance(), y.variance()));
}

TEST(RunningStats, EmptyAndSingle) {
  RunningStats st;
  EXPECT_EQ(st.variance(), 0.0);
  RunningStats empty;
  st.merge(empty);
  EXPECT_EQ(st.count(), 0u);
  st.add(0.25);
  EXPECT_EQ(st.mean(), 0.25);
  EXPECT_EQ(st.variance(), 0.0);
  empty.merge(st);
  EXPECT_EQ(empty.mean(), 0.25);
}

TEST(Wilson, KnownValues) {
  // 0 of 10: upper bound z^2 / (n + z^2).
  const auto zero = wilson_interval(0, 10);
  EXPECT_EQ(zero.lower, 0.0);
  EXPECT_NEAR(zero.upper, kZ95 * kZ95 / (10.0 + kZ95 * kZ95), 1e-12);
  const auto all = wilson_interval(10, 10);
  EXPECT_EQ(all.upper, 1.0);
  EXPECT_NEAR(all.lower, 10.0 / (10.0 + kZ95 * kZ95), 1e-12);
  const auto half = wilson_interval(50, 100);
  EXPECT_NEAR(half.lower + half.upper, 1.0, 1e-12);
  EXPECT_NEAR(half.lower, 0.4038315, 1e-6);
  const auto none = wilson_interval(0, 0);
  EXPECT_EQ(none.lower, 0.0);
  EXPECT_EQ(none.upper, 1.0);
}

TEST(Binning, LocateEdges) {
  const Binning b{10, 0.0, 1.0};
  EXPECT_EQ(b.locate(0.0), 0u);
  EXPECT_EQ(b.locate(1.0), 9u);
  EXPECT_EQ(b.locate(0.1), 1u);
  EXPECT_FALSE(b.locate(-1e-300).has_value());
  EXPECT_FALSE(b.locate(1.0 + 1e-15).has_value());
  EXPECT_FALSE(b.locate(std::nan("")).has_value());
  EXPECT_EQ(b.right(9), 1.0);
  EXPECT_THROW(validate(Binning{1, 0.0, 1.0}), InvalidArgument);
  EXPECT_THROW(validate(Binning{4, 1.0, 1.0}), InvalidArgument);
}

TEST(Histogram1D, CountsAndDensity) {
  Histogram1D h({4, 0.0, 1.0});
  for (double x : {0.1, 0.2, 0.3, 0.6, 1.0, 1.5, -0.1}) h.add(x);
  EXPECT_EQ(h.total(), 7u);
  EXPECT_EQ(h.underflow(), 1u);
  EXPECT_EQ(h.overflow(), 1u);
  EXPECT_EQ(h.counts(), (std::vector<std::uint64_t>{2, 1, 1, 1}));
  const auto d = h.density();
  double mass = 0.0;
  for (double v : d) mass += v * 0.25;
  EXPECT_NEAR(mass, 5.0 / 7.0, 1e-15);
  EXPECT_EQ(Histogram1D({4, 0.0, 1.0}).density(), std::vector<double>(4, 0.0));
}

TEST(Histogram1D, MergeIsExactAndOrderFree) {
  SampleStream s = test::stream(43);
  std::vector<Histogram1D> parts(5, Histogram1D({50, 0.0, 1.0}));
  Histogram1D all({50, 0.0, 1.0});
  for (int i = 0; i < 10000; ++i) {
    const double x = s.uniform(-0.1, 1.1);
    all.add(x);
    parts[static_cast<std::size_t>(i) % parts.size()].add(x);
  }
  Histogram1D left = parts[0], right = parts[4];
  for (std::size_t k = 1; k < parts.size(); ++k) left.merge(parts[k]);
  for (std::size_t k = parts.size() - 1; k-- > 0;) right.merge(parts[k]);
  EXPECT_EQ(left, all);
  EXPECT_EQ(right, all);
  EXPECT_THROW(left.merge(Histogram1D({49, 0.0, 1.0})), InvalidArgument);
}

TEST(Histogram1D, FromCountsChecksShape) {
  const auto h = Histogram1D::from_counts({3, 0.0, 1.0}, {1, 2, 3}, 4, 5);
  EXPECT_EQ(h.total(), 15u);
  EXPECT_THROW(Histogram1D::from_counts({3, 0.0, 1.0}, {1, 2}, 0, 0), InvalidArgument);
}

TEST(Histogram2D, ColumnNormalization) {
  Histogram2D h({4, 0.0, 1.0}, {5, 0.0, 1.0});
  SampleStream s = test::stream(44);
  for (int i = 0; i < 2000; ++i) h.add(s.uniform(0.0, 0.7), s.uniform());
  h.add(2.0, 0.5);
  EXPECT_EQ(h.outside(), 1u);
  const ConditionalDensity view = column_normalized(h);
  for (std::size_t xb = 0; xb < 4; ++xb) {
    if (!view.column_populated[xb]) {
      EXPECT_EQ(h.column_total(xb), 0u);
      continue;
    }
    double mass = 0.0;
    for (std::size_t yb = 0; yb < 5; ++yb) mass += view.at(xb, yb) * view.y.width();
    EXPECT_NEAR(mass, 1.0, 1e-12);
  }
  EXPECT_FALSE(view.column_populated[3]);
}

TEST(Histogram2D, ConditionalExceedance) {
  Histogram2D h({10, 0.0, 1.0}, {10, 0.0, 1.0});
  h.add(0.05, 0.95);  // x < 0.5, y >= 0.5
  h.add(0.15, 0.15);
  h.add(0.25, 0.45);
  h.add(0.45, 0.55);
  h.add(0.85, 0.95);  // excluded by x
  const auto p = conditional_exceedance(h, 0.5, 0.5);
  ASSERT_TRUE(p.has_value());
  EXPECT_DOUBLE_EQ(*p, 0.5);
  EXPECT_FALSE(conditional_exceedance(h, 0.0, 0.5).has_value());
  EXPECT_THROW(conditional_exceedance(h, 0.55, 0.5), InvalidArgument);
  Histogram2D other({10, 0.0, 1.0}, {10, 0.0, 1.0});
  other.add(0.3, 0.3);
  Histogram2D merged = h;
  merged.merge(other);
  EXPECT_EQ(merged.total(), 6u);
}

}  // namespace
}  // namespace qtransport
