#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bperc/counting.hpp"
#include "bperc/rng.hpp"

using namespace bperc;

TEST(Animals, SmallSizes) {
  const auto c = count_animals<2>(Adjacency::axis, 3);
  EXPECT_EQ(c.containing[1], 1u);
  EXPECT_EQ(c.containing[2], 4u);
  EXPECT_EQ(c.containing[3], 18u);
  EXPECT_EQ(c.fixed[3], 6u);
}

TEST(Animals, KnownFixedPolyominoCounts) {
  // Fixed polyominoes: 1, 2, 6, 19, 63, 216, 760, 2725.
  const auto c = count_animals<2>(Adjacency::axis, 8);
  const std::vector<std::uint64_t> known{0, 1, 2, 6, 19, 63, 216, 760, 2725};
  for (std::size_t n = 1; n <= 8; ++n) {
    EXPECT_EQ(c.fixed[n], known[n]);
    EXPECT_EQ(c.containing[n], n * known[n]);
  }
}

TEST(Animals, RedelmeierMatchesCanonicalFormSearch) {
  for (auto mode : {Adjacency::axis, Adjacency::diagonal}) {
    const auto a = count_animals<2>(mode, 6);
    const auto b = count_fixed_animals_bfs<2>(mode, 6);
    for (std::size_t n = 1; n <= 6; ++n) EXPECT_EQ(a.fixed[n], b[n]);
    const auto a3 = count_animals<3>(mode, 4);
    const auto b3 = count_fixed_animals_bfs<3>(mode, 4);
    for (std::size_t n = 1; n <= 4; ++n) EXPECT_EQ(a3.fixed[n], b3[n]);
  }
}

TEST(Animals, DiagonalNeighbourCounts) {
  EXPECT_EQ(count_animals<2>(Adjacency::diagonal, 2).containing[2], 8u);
  EXPECT_EQ(count_animals<3>(Adjacency::diagonal, 2).containing[2], 26u);
  EXPECT_EQ(count_animals<3>(Adjacency::axis, 2).containing[2], 6u);
}

TEST(Animals, SizeLimit) {
  EXPECT_THROW(count_animals<2>(Adjacency::axis, 11), InvalidArgument);
}

TEST(Animals, GrowthEstimateIsBelowTheLatticeBound) {
  const auto g = growth_estimate(count_animals<2>(Adjacency::axis, 9));
  EXPECT_GT(g.mu, 3.0);
  EXPECT_LT(g.mu, 5.0);
  EXPECT_GE(g.mu, g.last_ratio);
}

TEST(Partitions, KnownValues) {
  const auto t = partitions(100);
  EXPECT_EQ(t.p[1], 1);
  EXPECT_EQ(t.p[4], 5);
  EXPECT_EQ(t.p[10], 42);
  EXPECT_EQ(t.p[100], BigInt("190569292"));
}

TEST(Partitions, RecurrenceMatchesListing) {
  const auto t = partitions(30);
  for (unsigned n = 0; n <= 30; ++n) EXPECT_EQ(t.p[n], partitions_by_listing(n)) << n;
}

TEST(Partitions, SubexponentialBound) {
  const auto b = partition_bound(partitions(2000));
  EXPECT_EQ(b.violations, 0u);
  // 0.366 at n = 3 rises to 0.402 at n = 4, and again from 5 to 6
  EXPECT_EQ(b.decreasing_from, 6u);
  // log p(n) ~ π sqrt(2n/3): the best constant stays below π sqrt(2/3).
  EXPECT_LT(b.log_r, std::numbers::pi * std::sqrt(2.0 / 3.0));
}

TEST(Partitions, BigLogOfLargeValue) {
  const auto t = partitions(1000);
  // Hardy–Ramanujan: p(n) ≈ exp(π sqrt(2n/3)) / (4 n sqrt 3).
  const double n = 1000, hr = std::numbers::pi * std::sqrt(2 * n / 3) - std::log(4 * n * std::sqrt(3.0));
  EXPECT_NEAR(big_log(t.p[1000]), hr, 0.05);
}

TEST(Packing, SingleBox) {
  const auto out = disjoint_packing<2>({{3, -1}});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.front(), (BoxId<2>{3, -1}));
}

TEST(Packing, TwoByTwoBlock) {
  EXPECT_EQ(disjoint_packing<2>({{0, 0}, {0, 1}, {1, 0}, {1, 1}}).size(), 1u);
}

TEST(Packing, RandomConnectedSetsOfFifty) {
  const LatticeWindow<2> w(5, 20);
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    // Grow a ⊠-connected set by random attachment.
    std::vector<BoxId<2>> s{{0, 0}};
    std::uint64_t h = splitmix64(trial);
    while (s.size() < 50) {
      h = splitmix64(h);
      const auto& base = s[h % s.size()];
      const BoxId<2> next{base[0] + static_cast<int>((h >> 20) % 3) - 1, base[1] + static_cast<int>((h >> 40) % 3) - 1};
      if (std::find(s.begin(), s.end(), next) == s.end()) s.push_back(next);
    }
    const auto pack = disjoint_packing<2>(s);
    EXPECT_GE(pack.size(), 13u);
    for (std::size_t i = 0; i < pack.size(); ++i)
      for (std::size_t j = i + 1; j < pack.size(); ++j) EXPECT_TRUE(w.box_overlap(pack[i], pack[j]).empty());
  }
}

TEST(ExpDec, DecayingRate) {
  // M c^{1/k} = 0.9 with k = 4.
  const double k = 4, m = 2, c = std::pow(0.45, k);
  const auto b = exp_dec_bound(100, c, k, m, 2);
  EXPECT_NEAR(b.rate, 0.9, 1e-12);
  EXPECT_TRUE(b.decaying);
  const auto far = exp_dec_bound(1e6, c, k, m, 2), farther = exp_dec_bound(2e6, c, k, m, 2);
  EXPECT_NEAR((farther.log_value - far.log_value) / 1e6, std::log(0.9), 1e-3);
}

TEST(ExpDec, NonDecayingFlag) {
  const double k = 4, m = 2, c = std::pow(0.55, k);
  const auto b = exp_dec_bound(10, c, k, m, 2);
  EXPECT_NEAR(b.rate, 1.1, 1e-12);
  EXPECT_FALSE(b.decaying);
}

TEST(ExpDec, DomainErrors) {
  EXPECT_THROW(exp_dec_bound(1, 1.0, 4, 2, 2), InvalidArgument);
  EXPECT_THROW(exp_dec_bound(1, 0.5, 4, 1.0, 2), InvalidArgument);
}
