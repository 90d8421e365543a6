#include "adtarget/strategy_engine.hpp"

#include <cmath>
#include <vector>

#include "adtarget/oracle.hpp"
#include "gtest/gtest.h"
#include "test_support.hpp"

namespace adtarget {
namespace {

StatsDataset two_feature() { return load_dataset_file(ADTARGET_DATA_DIR "/two_feature.json"); }

TEST(Optimize, TwoFeatureAtTwentyPercent) {
  auto s = optimize(two_feature(), 0.2);
  ASSERT_EQ(s.features.size(), 2u);
  EXPECT_FALSE(s.features[0].active);
  EXPECT_EQ(s.features[0].labels, (std::vector<std::string>{"a1", "a2"}));
  EXPECT_TRUE(s.features[1].active);
  EXPECT_EQ(s.features[1].labels, (std::vector<std::string>{"b1"}));
  EXPECT_DOUBLE_EQ(s.lift, 2.0);
  EXPECT_DOUBLE_EQ(s.coverage, 0.25);
  EXPECT_EQ(s.active_count(), 1u);
  EXPECT_FALSE(s.fast_path);
  ASSERT_TRUE(s.expected_sales && s.profit && s.conditional_buy_prob);
  EXPECT_DOUBLE_EQ(*s.conditional_buy_prob, 0.02);
  EXPECT_NEAR(*s.expected_sales, 5000.0, 1e-6);
  EXPECT_NEAR(*s.profit, 70000.0, 1e-6);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Optimize, TwoFeatureUnconstrained) {
  auto s = optimize(two_feature(), 0.1);
  EXPECT_TRUE(s.fast_path);
  EXPECT_EQ(s.active_count(), 2u);
  EXPECT_NEAR(s.lift, 3.2, 1e-12);
  EXPECT_NEAR(s.log_lift, std::log(3.2), 1e-12);
}

TEST(Optimize, FullCoverageSelectsEverything) {
  auto s = optimize(two_feature(), 1.0);
  EXPECT_EQ(s.active_count(), 0u);
  EXPECT_EQ(s.lift, 1.0);
  EXPECT_EQ(s.coverage, 1.0);
}

TEST(Optimize, ExclusionsForceFullPrefix) {
  auto s = optimize(two_feature(), 0.1, {"B"});
  EXPECT_FALSE(s.features[1].active);
  EXPECT_TRUE(s.features[1].excluded);
  EXPECT_NEAR(s.lift, 1.6, 1e-12);
  EXPECT_THROW(optimize(two_feature(), 0.1, {"nope"}), DomainError);
  EXPECT_THROW(optimize(two_feature(), 1.5), DomainError);
}

TEST(Evaluate, WarnsWhenConditionalProbabilityExceedsOne) {
  auto ds = two_feature();
  ds.buy_rate = 0.5;
  auto s = optimize(ds, 0.0);
  EXPECT_NEAR(*s.conditional_buy_prob, 1.6, 1e-12);
  EXPECT_EQ(s.warnings.size(), 1u);
}

TEST(Evaluate, SymbolicBuyRate) {
  auto ds = two_feature();
  ds.buy_rate.reset();
  auto s = optimize(ds, 0.2);
  EXPECT_FALSE(s.conditional_buy_prob.has_value());
  EXPECT_FALSE(s.profit.has_value());
  EXPECT_EQ(lift_in_units_of_b(s.lift), "2.00·B");
}

TEST(DefaultGrid, EndpointsExact) {
  auto g = default_grid(50);
  ASSERT_EQ(g.size(), 50u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(default_grid(3), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Sweep, ThreePointGrid) {
  auto r = sweep(two_feature(), {0.0, 0.5, 1.0});
  ASSERT_EQ(r.points.size(), 3u);
  EXPECT_NEAR(r.points[0].lift, 3.2, 1e-12);
  EXPECT_NEAR(r.points[1].lift, 1.6, 1e-12);
  EXPECT_EQ(r.points[2].lift, 1.0);
  EXPECT_EQ(r.feature_names, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(r.frequency, (std::vector<std::size_t>{2, 1}));
  EXPECT_THROW(sweep(two_feature(), {0.5, 2.0}), DomainError);
}

TEST(Sweep, ThreadedMatchesSerial) {
  auto ds = generate_synthetic(feature_catalog(), 11);
  auto grid = default_grid(12);
  auto serial = sweep(ds, grid, {}, 1);
  auto threaded = sweep(ds, grid, {}, 4);
  ASSERT_EQ(serial.points.size(), threaded.points.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_EQ(serial.points[g].lift, threaded.points[g].lift);
    EXPECT_EQ(serial.points[g].active_count(), threaded.points[g].active_count());
  }
  EXPECT_EQ(serial.frequency, threaded.frequency);
}

TEST(CorrelationReport, RecommendsMostFrequentMember) {
  auto r = sweep(two_feature(), {0.0, 0.5, 1.0});
  auto groups = correlation_report(r, {{"B", "A"}});
  ASSERT_EQ(groups.size(), 1u);
  const auto& g = groups[0];
  EXPECT_TRUE(g.violation);
  EXPECT_EQ(g.co_active_points, (std::vector<std::size_t>{0}));
  EXPECT_EQ(*g.keep, "A");
  EXPECT_EQ(g.exclude, (std::vector<std::string>{"B"}));

  auto quiet = correlation_report(sweep(two_feature(), {0.5, 1.0}), {{"A", "B"}});
  EXPECT_FALSE(quiet[0].violation);
  EXPECT_FALSE(quiet[0].keep.has_value());
  EXPECT_THROW(correlation_report(r, {{"A", "C"}}), DomainError);
}

// The reported strategy is the enumerated optimum, meets its floor and
// carries consistent lift/coverage products.
TEST(Optimize, MatchesEnumerationProperty) {
  for (const auto& c : testing::corpus(200, 7000)) {
    StrategyEngine engine(c.dataset);
    auto s = engine.optimize(c.coverage_floor);
    auto truth = combo_oracle(engine.families(), c.coverage_floor);
    EXPECT_TRUE(testing::rel_close(s.lift, truth.best_objective, 1e-9)) << "seed " << c.seed;
    EXPECT_GE(s.coverage * (1 + 1e-12), c.coverage_floor);
    EXPECT_TRUE(testing::rel_close(std::log(s.lift), s.log_lift, 1e-9));
    for (const auto& f : s.features) EXPECT_EQ(f.active, f.prefix.length < f.type_count);
  }
}

// Excluding a feature never raises the optimum.
TEST(Optimize, ExclusionNeverHelpsProperty) {
  for (const auto& c : testing::corpus(100, 9000)) {
    auto base = optimize(c.dataset, c.coverage_floor);
    auto restricted = optimize(c.dataset, c.coverage_floor, {c.dataset.features[0].name});
    EXPECT_LE(restricted.lift, base.lift * (1 + 1e-12)) << "seed " << c.seed;
    EXPECT_FALSE(restricted.features[0].active);
  }
}

}  // namespace
}  // namespace adtarget
