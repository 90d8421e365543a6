#include "adtarget/prefix_gen.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "adtarget/oracle.hpp"
#include "gtest/gtest.h"
#include "test_support.hpp"

namespace adtarget {
namespace {

FeatureStats six_type() { return load_dataset_file(ADTARGET_DATA_DIR "/six_type.json").features[0]; }

FeatureStats feature(std::vector<double> q, std::vector<double> p) {
  FeatureStats f{"f", {}};
  for (std::size_t k = 0; k < q.size(); ++k) f.types.push_back({"t" + std::to_string(k + 1), q[k], p[k]});
  return f;
}

TEST(RankTypes, SixTypeOrder) {
  EXPECT_EQ(rank_types(six_type()), (std::vector<std::size_t>{0, 1, 2, 5, 3, 4}));
}

TEST(RankTypes, SingleType) { EXPECT_EQ(rank_types(feature({1.0}, {1.0})), (std::vector<std::size_t>{0})); }

TEST(RankTypes, EqualRatiosKeepInputOrder) {
  EXPECT_EQ(rank_types(feature({0.2, 0.3, 0.5}, {0.2, 0.3, 0.5})), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(RankTypes, NullTypesGoLast) {
  // t2 has p = q = 0, t3 has ratio 0 with q > 0.
  EXPECT_EQ(rank_types(feature({0.4, 0.0, 0.6}, {1.0, 0.0, 0.0})), (std::vector<std::size_t>{0, 2, 1}));
}

TEST(RankTypes, RejectsBuyersWithoutAudience) {
  EXPECT_THROW(rank_types(feature({0.0, 1.0}, {1.0, 0.0})), DomainError);
}

TEST(BuildFamily, SixTypePrefixes) {
  auto fam = build_family(six_type());
  ASSERT_EQ(fam.size(), 6u);
  EXPECT_DOUBLE_EQ(fam.prefix(1).cum_p, 0.1627);
  EXPECT_DOUBLE_EQ(fam.prefix(1).cum_q, 0.0728);
  EXPECT_NEAR(fam.prefix(1).lift, 2.235, 1e-3);
  EXPECT_NEAR(fam.prefix(2).cum_p, 0.6619, 1e-12);
  EXPECT_NEAR(fam.prefix(2).cum_q, 0.3328, 1e-12);
  EXPECT_NEAR(fam.prefix(2).lift, 1.989, 1e-3);
  EXPECT_EQ(fam.full().lift, 1.0);
}

TEST(BuildFamily, TwoTypeExample) {
  auto fam = build_family(feature({0.5, 0.5}, {0.8, 0.2}));
  ASSERT_EQ(fam.size(), 2u);
  EXPECT_EQ(fam.prefix(1).members, (std::vector<std::size_t>{0}));
  EXPECT_DOUBLE_EQ(fam.prefix(1).lift, 1.6);
  EXPECT_EQ(fam.prefix(2).members, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(fam.prefix(2).lift, 1.0);
  // Subset oracle agrees on both prefixes.
  EXPECT_DOUBLE_EQ(subset_oracle(feature({0.5, 0.5}, {0.8, 0.2}), 0.0).best_objective, 1.6);
  EXPECT_DOUBLE_EQ(subset_oracle(feature({0.5, 0.5}, {0.8, 0.2}), 0.75).best_objective, 1.0);
}

TEST(BuildFamily, TrailingNullTypesCollapseToFullCoverage) {
  auto fam = build_family(feature({0.4, 0.0, 0.6}, {0.7, 0.0, 0.3}));
  EXPECT_EQ(fam.prefix(2).cum_q, 1.0);
  EXPECT_EQ(fam.prefix(2).lift, 1.0);
  EXPECT_EQ(fam.full().cum_p, 1.0);
}

TEST(GreedySubproblem, SixType) {
  auto f = six_type();
  auto at0 = greedy_subproblem(f, 0.0);
  EXPECT_EQ(at0.members, (std::vector<std::size_t>{0}));
  EXPECT_NEAR(at0.lift, 2.20, 0.05);
  auto at30 = greedy_subproblem(f, 0.30);
  EXPECT_EQ(at30.members, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(at30.lift, 1.99, 0.01);
}

TEST(GreedySubproblem, FullCoverageGivesFullPrefix) {
  auto f = six_type();
  auto full = greedy_subproblem(f, 1.0);
  EXPECT_EQ(full.length, 6u);
  EXPECT_EQ(full.lift, 1.0);
  EXPECT_THROW(greedy_subproblem(f, 1.01), DomainError);
  EXPECT_THROW(greedy_subproblem(f, -0.1), DomainError);
}

TEST(GreedySubproblem, BoundaryCoverageIsFeasible) {
  auto f = feature({0.5, 0.5}, {0.8, 0.2});
  EXPECT_EQ(greedy_subproblem(f, 0.5).length, 1u);
}

// Invariants of every generated family, over random validated features.
TEST(BuildFamily, FamilyInvariantsProperty) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto c = testing::random_case(seed);
    for (const auto& f : c.dataset.features) {
      auto fam = build_family(f);
      const std::size_t m = f.size();
      ASSERT_EQ(fam.size(), m);

      auto sorted = fam.ranking;
      std::sort(sorted.begin(), sorted.end());
      std::vector<std::size_t> iota(m);
      std::iota(iota.begin(), iota.end(), std::size_t{0});
      EXPECT_EQ(sorted, iota) << "ranking is not a permutation";

      for (std::size_t k = 1; k <= m; ++k) {
        const auto& c_k = fam.prefix(k);
        EXPECT_EQ(c_k.length, k);
        EXPECT_TRUE(std::equal(c_k.members.begin(), c_k.members.end(), fam.ranking.begin()));
        double sp = 0, sq = 0;
        for (auto t : c_k.members) {
          sp += f.types[t].p;
          sq += f.types[t].q;
        }
        EXPECT_TRUE(testing::rel_close(c_k.cum_p, sp, 1e-12));
        EXPECT_TRUE(testing::rel_close(c_k.cum_q, sq, 1e-12));
        EXPECT_GE(c_k.lift, 1.0);
        if (k > 1) {
          EXPECT_LE(c_k.lift, fam.prefix(k - 1).lift);
          EXPECT_GT(c_k.cum_q, fam.prefix(k - 1).cum_q);
        }
      }
      EXPECT_EQ(fam.full().cum_q, 1.0);
      EXPECT_EQ(fam.full().cum_p, 1.0);
      EXPECT_EQ(fam.full().lift, 1.0);
    }
  }
}

// Greedy equals the best prefix (independent ordering) for every floor.
TEST(GreedySubproblem, OptimalWithinPrefixFamilyProperty) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto c = testing::random_case(seed);
    for (const auto& f : c.dataset.features) {
      auto fam = build_family(f);
      for (int g = 0; g <= 20; ++g) {
        const double floor = g / 20.0;
        const auto& greedy = greedy_subproblem(fam, floor);
        auto best = prefix_oracle(f, floor);
        auto members = greedy.members;
        std::sort(members.begin(), members.end());
        EXPECT_EQ(members, best.best_selection) << "seed " << seed << " floor " << floor;
        EXPECT_TRUE(testing::rel_close(greedy.lift, best.best_objective, 1e-12));
      }
    }
  }
}

}  // namespace
}  // namespace adtarget
