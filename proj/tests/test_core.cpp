#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hkm/core.hpp"
#include "hkm/rng.hpp"
#include "oracles.hpp"

using namespace hkm;

TEST(Distance, EuclideanMatchesHandValues) {
  const std::vector<double> p{0.0, 0.0}, q{3.0, 4.0};
  EXPECT_DOUBLE_EQ(euclidean_dist(p, q), 5.0);
  EXPECT_DOUBLE_EQ(squared_dist(p, q), 25.0);
  EXPECT_DOUBLE_EQ(euclidean_dist(q, q), 0.0);
}

TEST(Distance, DimensionMismatchThrows) {
  const std::vector<double> p{0.0}, q{1.0, 2.0};
  EXPECT_THROW(euclidean_dist(p, q), InvalidInput);
}

TEST(Distance, MetricAxiomsOnRandomTriples) {
  RngStream rng(11);
  for (int it = 0; it < 300; ++it) {
    std::vector<double> a(3), b(3), c(3);
    for (std::size_t k = 0; k < 3; ++k) {
      a[k] = rng.uniform(-5, 5);
      b[k] = rng.uniform(-5, 5);
      c[k] = rng.uniform(-5, 5);
    }
    EXPECT_DOUBLE_EQ(euclidean_dist(a, b), euclidean_dist(b, a));
    EXPECT_LE(euclidean_dist(a, c), euclidean_dist(a, b) + euclidean_dist(b, c) + 1e-12);
  }
}

TEST(Dataset, ValidatesInput) {
  EXPECT_THROW(Dataset(0, {}), InvalidInput);
  EXPECT_THROW(Dataset(2, {1.0, 2.0, 3.0}), InvalidInput);
  EXPECT_THROW(Dataset(1, {}), InvalidInput);
  EXPECT_THROW(Dataset(1, {1.0, std::nan("")}), InvalidInput);
  EXPECT_THROW(Dataset(1, {1.0, 2.0}, {3, 3}), InvalidInput);
  EXPECT_THROW(Dataset::from_points({Point{{1.0}}, Point{{1.0, 2.0}}}), InvalidInput);
}

TEST(Dataset, DeletionKeepsIds) {
  Dataset d(1, {0.0, 1.0, 2.0, 3.0});
  const Dataset e = d.without_positions({2, 0});
  EXPECT_EQ(e.ids(), (std::vector<Id>{1, 3}));
  EXPECT_EQ(e.point(1)[0], 3.0);
  EXPECT_EQ(e.position_of(3), 1u);
  EXPECT_EQ(e.position_of(2), e.size());
  EXPECT_FALSE(e.contains(0));
  EXPECT_THROW(d.without_positions({0, 1, 2, 3}), InvalidInput);
  EXPECT_THROW(d.without_positions({9}), InvalidInput);
}

TEST(Partition, CanonicalForm) {
  Partition a({{5, 3}, {1, 4}, {2}});
  EXPECT_EQ(a.blocks(), (std::vector<std::vector<Id>>{{1, 4}, {2}, {3, 5}}));
  Partition b({{2}, {3, 5}, {4, 1}});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.ground(), (std::vector<Id>{1, 2, 3, 4, 5}));
  EXPECT_EQ(a.ground_size(), 5u);
}

TEST(Partition, RejectsEmptyAndOverlappingBlocks) {
  EXPECT_THROW(Partition({{1}, {}}), InvalidInput);
  EXPECT_THROW(Partition({{1, 2}, {2, 3}}), InvalidInput);
}

TEST(Partition, FromLabels) {
  const std::vector<Id> ids{10, 11, 12, 13};
  const std::vector<std::size_t> labels{7, 2, 7, 0};
  const auto p = Partition::from_labels(ids, labels);
  EXPECT_EQ(p.blocks(), (std::vector<std::vector<Id>>{{10, 12}, {11}, {13}}));
}

TEST(KMedianCost, HandValues) {
  Dataset d(1, {0.0, 1.0, 5.0});
  EXPECT_DOUBLE_EQ(kmedian_cost(d, std::vector<Id>{1}), 5.0);
  EXPECT_DOUBLE_EQ(kmedian_cost(d, std::vector<Id>{0, 2}), 1.0);
  EXPECT_DOUBLE_EQ(kmedian_cost(d, std::vector<Id>{0, 1, 2}), 0.0);
  EXPECT_THROW(kmedian_cost(d, std::vector<Id>{}), InvalidInput);
  EXPECT_THROW(kmedian_cost(d, std::vector<Id>{7}), InvalidInput);
}

TEST(KMedianCost, MonotoneUnderAddingCenters) {
  RngStream rng(3);
  for (int it = 0; it < 50; ++it) {
    const auto d = oracle::random_dataset(rng, 12, 2);
    std::vector<Id> centers;
    double prev = std::numeric_limits<double>::infinity();
    for (Id c = 0; c < d.size(); ++c) {
      centers.push_back(c);
      const double now = kmedian_cost(d, centers);
      EXPECT_LE(now, prev + kCostTolerance);
      prev = now;
    }
    EXPECT_NEAR(prev, 0.0, 1e-12);
  }
}

TEST(DiscreteOptimum, HandInstance) {
  Dataset d(1, {0.0, 1.0, 2.0, 10.0, 11.0});
  const auto one = opt_kmedian_discrete(d, 1);
  EXPECT_EQ(one.centers, (std::vector<Id>{2}));
  EXPECT_DOUBLE_EQ(one.cost, 2 + 1 + 0 + 8 + 9);
  const auto two = opt_kmedian_discrete(d, 2);
  EXPECT_EQ(two.centers, (std::vector<Id>{1, 3}));
  EXPECT_DOUBLE_EQ(two.cost, 3.0);
  EXPECT_DOUBLE_EQ(opt_kmedian_discrete(d, 5).cost, 0.0);
}

TEST(DiscreteOptimum, GuardsAndRanges) {
  RngStream rng(5);
  const auto d = oracle::random_dataset(rng, 16, 1);
  EXPECT_THROW(opt_kmedian_discrete(d, 2), SizeError);
  EXPECT_THROW(opt_kmedian_discrete(d, 0, 20), InvalidInput);
  EXPECT_THROW(opt_kmedian_discrete(d, 17, 20), InvalidInput);
}

TEST(DiscreteOptimum, NoSubsetBeatsIt) {
  RngStream rng(8);
  for (int it = 0; it < 20; ++it) {
    const auto d = oracle::random_dataset(rng, 7, 2);
    for (std::size_t k = 1; k <= 3; ++k) {
      const auto best = opt_kmedian_discrete(d, k);
      for (int s = 0; s < 30; ++s) {
        std::vector<Id> c;
        while (c.size() < k) {
          const Id x = rng.below(d.size());
          if (std::find(c.begin(), c.end(), x) == c.end()) c.push_back(x);
        }
        EXPECT_GE(kmedian_cost(d, c), best.cost - kCostTolerance);
      }
    }
  }
}

TEST(DistanceExtremes, HandValuesAndDuplicates) {
  Dataset d(1, {0.0, 1.0, 5.0});
  const auto ex = distance_extremes(d);
  EXPECT_DOUBLE_EQ(ex.d_min, 1.0);
  EXPECT_DOUBLE_EQ(ex.d_max, 5.0);
  EXPECT_DOUBLE_EQ(ex.aspect_ratio, 5.0);
  Dataset dup(2, {1.0, 1.0, 0.0, 0.0, 1.0, 1.0});
  try {
    distance_extremes(dup);
    FAIL();
  } catch (const DegenerateInput& e) {
    EXPECT_NE(std::string(e.what()).find("0 and 2"), std::string::npos);
  }
  EXPECT_THROW(distance_extremes(Dataset(1, {3.0})), InvalidInput);
}

TEST(CheckNested, AcceptsRefinementChain) {
  std::vector<Partition> levels{Partition({{0, 1, 2, 3}}), Partition({{0, 1}, {2, 3}}),
                                Partition({{0}, {1}, {2, 3}})};
  EXPECT_TRUE(check_nested(levels).ok);
}

TEST(CheckNested, ReportsViolations) {
  std::vector<Partition> wrong_count{Partition({{0, 1}, {2}})};
  auto r = check_nested(wrong_count);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.violation_level, 1u);

  std::vector<Partition> straddle{Partition({{0, 1, 2, 3}}), Partition({{0, 1}, {2, 3}}),
                                  Partition({{0, 2}, {1}, {3}})};
  r = check_nested(straddle);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.violation_level, 3u);

  std::vector<Partition> ground{Partition({{0, 1}}), Partition({{0}, {2}})};
  EXPECT_FALSE(check_nested(ground).ok);
}

TEST(Rng, SameSeedSameStream) {
  RngStream a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformRangeAndBelow) {
  RngStream r(1);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++hits[r.below(7)];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(Rng, NormalMoments) {
  RngStream r(2);
  double s = 0, sq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    sq += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.03);
}

TEST(Rng, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t t = 0; t < 200; ++t)
    for (std::uint64_t s = 0; s < 2; ++s) seen.insert(derive_seed(7, {t, s}));
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_EQ(derive_seed(7, {1, 0}), RngStream(7).derive({1, 0}).seed());
}
