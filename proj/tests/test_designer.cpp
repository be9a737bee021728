#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "choiceforge/analytics.hpp"
#include "choiceforge/designer.hpp"
#include "choiceforge/errors.hpp"
#include "choiceforge/rng.hpp"

using namespace choiceforge;

namespace {

// V(p) = a - b p through a fixed "quality" level of 1.
const AttributeSchema kToy = AttributeSchema::with_price({"quality", "price"});
ParameterVector toy(double a, double b) { return ParameterVector{{a, -b}, {}}; }
const std::vector<double> kLevels{1.0, 0.0};

double revenue(double a, double b, double p) { return p / (1.0 + std::exp(-(a - b * p))); }

}  // namespace

TEST(RevenueCurve, MonotoneUtilityAndProbability) {
  const auto grid = price_grid({0.0, 6.0}, 601);
  const auto curve = revenue_curve(toy(2.0, 1.0), kToy, kLevels, grid);
  ASSERT_EQ(curve.size(), 601u);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    EXPECT_LT(curve[i].utility, curve[i - 1].utility);
    EXPECT_LT(curve[i].probability, curve[i - 1].probability);
  }
  for (const auto& c : curve) EXPECT_EQ(c.revenue, c.price * c.probability);
  EXPECT_EQ(curve.front().revenue, 0.0);
}

TEST(RevenueCurve, DenseGridPeaksAtTwo) {
  const auto grid = price_grid({0.0, 6.0}, 601);
  const auto curve = revenue_curve(toy(2.0, 1.0), kToy, kLevels, grid);
  const auto best = std::max_element(curve.begin(), curve.end(),
                                     [](const CurveSample& x, const CurveSample& y) { return x.revenue < y.revenue; });
  EXPECT_NEAR(best->price, 2.0, 0.01);
  EXPECT_NEAR(best->revenue, 1.0, 0.005);
}

TEST(RevenueCurve, RejectsUpwardSlopingDemandAndBadGrids) {
  const std::vector<double> grid{1.0, 2.0};
  EXPECT_THROW(revenue_curve(toy(2.0, 0.0), kToy, kLevels, grid), EconomicValidityError);
  const std::vector<double> flat{1.0, 1.0};
  EXPECT_THROW(revenue_curve(toy(2.0, 1.0), kToy, kLevels, flat), InputError);
}

TEST(OptimizePrice, ClosedFormToy) {
  const auto s = optimize_price(toy(2.0, 1.0), kToy, kLevels, {0.0, 6.0});
  EXPECT_NEAR(s.price, 2.0, 1e-4);
  EXPECT_NEAR(s.purchase_probability, 0.5, 1e-4);
}

TEST(OptimizePrice, FirstOrderConditionForOtherIntercept) {
  const auto s = optimize_price(toy(4.0, 1.0), kToy, kLevels, {0.0, 20.0});
  EXPECT_NEAR(s.price * (1.0 - s.purchase_probability), 1.0, 1e-6);
}

TEST(OptimizePrice, ClipsToBounds) {
  const auto s = optimize_price(toy(2.0, 1.0), kToy, kLevels, {3.0, 5.0});
  EXPECT_EQ(s.price, 3.0);
}

TEST(OptimizePrice, NeverLosesToDenseGrid) {
  CounterRng rng(41, 0);
  for (int i = 0; i < 30; ++i) {
    const double a = 4.0 * rng.uniform() - 1.0;
    const double b = 0.1 + 2.0 * rng.uniform();
    const Interval bounds{rng.uniform(), 1.0 + 10.0 * rng.uniform()};
    const auto s = optimize_price(toy(a, b), kToy, kLevels, bounds);
    for (double p : price_grid(bounds, 2001)) EXPECT_GE(s.objective_value, revenue(a, b, p) - 1e-12);
  }
}

TEST(OptimizeDesign, RevenuePushesValuedIndicatorsToUpperBounds) {
  const auto schema = AttributeSchema::with_price({"accuracy", "rate", "comfort", "price"});
  const ParameterVector p{{0.8, 0.01, 0.3, -0.15}, {}};
  DesignSpace space;
  space.bounds = {{0.0, 1.0}, {10.0, 200.0}, {1.0, 5.0}, {}};
  space.price_bounds = {1.0, 60.0};
  const auto s = optimize_design(p, schema, space, DesignObjective::revenue);
  EXPECT_EQ(s.attribute_levels[0], 1.0);
  EXPECT_EQ(s.attribute_levels[1], 200.0);
  EXPECT_EQ(s.attribute_levels[2], 5.0);
  EXPECT_EQ(s.attribute_levels[3], s.price);
}

TEST(OptimizeDesign, ExpensiveIndicatorStaysAtLowerBound) {
  // Each quality unit costs 3 while it is worth 0.5 / 1 = 0.5 currency.
  const auto schema = AttributeSchema::with_price({"quality", "price"});
  const ParameterVector p{{0.5, -1.0}, {}};
  DesignSpace space;
  space.bounds = {{0.0, 2.0}, {}};
  space.price_bounds = {0.0, 10.0};
  space.cost_coefficients = {3.0, 0.0};
  const auto s = optimize_design(p, schema, space, DesignObjective::profit);
  EXPECT_EQ(s.attribute_levels[0], 0.0);

  double brute = -1e300;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      const std::vector<double> levels{2.0 * i / 49.0, 10.0 * j / 49.0};
      brute = std::max(brute, design_objective_value(p, schema, space, DesignObjective::profit, levels, levels[1]));
    }
  }
  EXPECT_GE(s.objective_value, brute - 1e-12);
}

TEST(OptimizeDesign, NoSingleStepPerturbationImproves) {
  const auto schema = AttributeSchema::with_price({"a", "b", "price"});
  CounterRng rng(43, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const ParameterVector p{{rng.normal(), rng.normal(), -0.2 - rng.uniform()}, {}};
    DesignSpace space;
    space.bounds = {{0.0, 1.0 + rng.uniform()}, {-1.0, 1.0}, {}};
    space.price_bounds = {0.0, 5.0 + 10.0 * rng.uniform()};
    space.cost_coefficients = {rng.uniform(), rng.uniform(), 0.0};
    const auto objective = trial % 2 == 0 ? DesignObjective::revenue : DesignObjective::profit;
    const auto s = optimize_design(p, schema, space, objective);
    const double best = design_objective_value(p, schema, space, objective, s.attribute_levels, s.price);
    EXPECT_NEAR(best, s.objective_value, 1e-12);
    for (std::size_t k = 0; k < schema.size(); ++k) {
      const Interval box = k == schema.price_index ? space.price_bounds : space.bounds[k];
      const double step = box.width() / 99.0;
      for (double dir : {-1.0, 1.0}) {
        auto levels = s.attribute_levels;
        levels[k] = std::clamp(levels[k] + dir * step, box.lower, box.upper);
        const double price = levels[schema.price_index];
        EXPECT_LE(design_objective_value(p, schema, space, objective, levels, price), best + 1e-12);
      }
    }
  }
}

TEST(OptimizeDesign, EmptyOrInvalidSpacesAreRejected) {
  const ParameterVector p{{0.5, -1.0}, {}};
  DesignSpace space;
  space.bounds = {{1.0, 0.0}, {}};
  space.price_bounds = {0.0, 10.0};
  EXPECT_THROW(optimize_design(p, kToy, space, DesignObjective::revenue), InputError);
  space.bounds = {{0.0, 1.0}, {}};
  EXPECT_THROW(optimize_design(p, kToy, space, DesignObjective::profit), InputError);  // no cost model
  EXPECT_THROW(optimize_design(ParameterVector{{0.5, 0.1}, {}}, kToy, space, DesignObjective::revenue),
               EconomicValidityError);
}

TEST(PremiumShare, IdenticalOffersSplitEqually) {
  const auto schema = AttributeSchema::with_price({"rate", "price"});
  const ParameterVector p{{0.02, -0.3}, {}};
  const AttributeVector base{{50.0, 10.0}, {}};
  const auto r = premium_share(p, schema, base, base, 1000.0);
  EXPECT_EQ(r.base_probability, r.premium_probability);
  EXPECT_EQ(r.base_adopters, r.premium_adopters);
}

TEST(PremiumShare, VanishingPremiumLeavesBinaryMarket) {
  const auto schema = AttributeSchema::with_price({"rate", "price"});
  const ParameterVector p{{0.02, -0.3}, {}};
  const AttributeVector base{{50.0, 10.0}, {}};
  const AttributeVector premium{{50.0, 10.0 + 700.0 / 0.3}, {}};
  const auto r = premium_share(p, schema, base, premium, 1000.0);
  const double v = 0.02 * 50.0 - 0.3 * 10.0;
  EXPECT_NEAR(r.base_probability, 1.0 / (1.0 + std::exp(-v)), 1e-9);
  EXPECT_NEAR(r.outside_probability, 1.0 / (1.0 + std::exp(v)), 1e-9);
}

TEST(PremiumShare, IncrementalWtp) {
  const auto schema = AttributeSchema::with_price({"rate", "price"});
  const ParameterVector p{{0.02, -0.3}, {}};
  const auto r = premium_share(p, schema, AttributeVector{{50.0, 10.0}, {}}, AttributeVector{{100.0, 12.0}, {}}, 1.0);
  EXPECT_NEAR(r.incremental_wtp, 100.0 / 30.0, 1e-12);
}
