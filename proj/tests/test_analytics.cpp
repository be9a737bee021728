#include <gtest/gtest.h>

#include <cmath>

#include "choiceforge/analytics.hpp"
#include "choiceforge/errors.hpp"
#include "choiceforge/synth.hpp"
#include "test_support.hpp"

using namespace choiceforge;

namespace {

const AttributeSchema kSchema = AttributeSchema::with_price({"quality", "speed", "price"});

ChoiceScenario with_outside(std::vector<std::vector<double>> offers) {
  ChoiceScenario s;
  for (auto& v : offers) s.alternatives.push_back(AttributeVector{std::move(v), {}});
  s.includes_outside_option = true;
  return s;
}

}  // namespace

TEST(Wtp, RatioOfCoefficients) {
  const auto r = wtp(ParameterVector{{0.5, 0.0, -0.25}, {}}, kSchema);
  EXPECT_EQ(r.per_attribute_wtp.at("quality"), 2.0);
  EXPECT_EQ(r.per_attribute_wtp.at("speed"), 0.0);
  EXPECT_EQ(r.per_attribute_wtp.count("price"), 0u);
  EXPECT_EQ(r.price_coefficient, -0.25);
}

TEST(Wtp, ScaleInvariant) {
  const ParameterVector p{{0.7, -0.2, -0.3}, {}};
  const auto a = wtp(p, kSchema);
  const auto b = wtp(p.scaled(3.7), kSchema);
  for (const auto& [name, v] : a.per_attribute_wtp) EXPECT_NEAR(b.per_attribute_wtp.at(name), v, 1e-12);
}

TEST(Wtp, NonNegativePriceCoefficientIsEconomicallyInvalid) {
  EXPECT_THROW(wtp(ParameterVector{{0.5, 0.1, 0.0}, {}}, kSchema), EconomicValidityError);
  EXPECT_THROW(wtp(ParameterVector{{0.5, 0.1, 0.2}, {}}, kSchema), EconomicValidityError);
}

TEST(PriceDerivative, BinaryAtHalf) {
  const AttributeSchema schema = AttributeSchema::with_price({"price"});
  ChoiceScenario s;
  s.alternatives = {AttributeVector{{1.0}, {}}, AttributeVector{{1.0}, {}}};
  EXPECT_NEAR(price_derivative(ParameterVector{{-1.0}, {}}, schema, s, 0), -0.25, 1e-15);
}

TEST(PriceDerivative, ZeroPriceCoefficientGivesZero) {
  const auto s = with_outside({{1.0, 2.0, 3.0}, {0.5, 0.1, 9.0}});
  EXPECT_EQ(price_derivative(ParameterVector{{0.3, 0.1, 0.0}, {}}, kSchema, s, 1), 0.0);
}

TEST(PriceDerivative, MatchesCentralDifferences) {
  CounterRng rng(31, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const ParameterVector p{{rng.normal(), rng.normal(), -0.1 - rng.uniform()}, {}};
    ChoiceScenario s;
    const std::size_t n_alts = 1 + rng.below(3);
    for (std::size_t j = 0; j < n_alts; ++j) {
      s.alternatives.push_back(AttributeVector{{rng.normal(), rng.normal(), 5.0 * rng.uniform()}, {}});
    }
    s.includes_outside_option = rng.below(2) == 0 || n_alts == 1;
    const std::size_t alt = rng.below(n_alts);
    const double h = 1e-6;
    auto up = s;
    auto dn = s;
    up.alternatives[alt].values[2] += h;
    dn.alternatives[alt].values[2] -= h;
    const double fd = (choice_probabilities(p, up)[alt] - choice_probabilities(p, dn)[alt]) / (2.0 * h);
    const double an = price_derivative(p, kSchema, s, alt);
    EXPECT_TRUE(cftest::relative_close(an, fd, 1e-6, 1e-4)) << an << " vs " << fd;
  }
}

TEST(PriceDerivative, BadIndexIsInputError) {
  const auto s = with_outside({{1.0, 2.0, 3.0}});
  EXPECT_THROW(price_derivative(ParameterVector{{0.3, 0.1, -1.0}, {}}, kSchema, s, 1), InputError);
}

TEST(MarketPotential, HalfOfPopulation) {
  const auto s = with_outside({{0.0, 0.0, 0.0}});
  EXPECT_NEAR(market_potential(ParameterVector{{1.0, 1.0, -1.0}, {}}, s, 10000.0), 5000.0, 1e-9);
}

TEST(MarketPotential, VanishesAtExtremePrice) {
  const auto s = with_outside({{0.0, 0.0, 1000.0}});
  EXPECT_LT(market_potential(ParameterVector{{1.0, 1.0, -1.0}, {}}, s, 10000.0), 1.0);
}

TEST(MarketPotential, NeedsOutsideOption) {
  ChoiceScenario s;
  s.alternatives = {AttributeVector{{0.0, 0.0, 1.0}, {}}, AttributeVector{{0.0, 0.0, 2.0}, {}}};
  EXPECT_THROW(market_potential(ParameterVector{{1.0, 1.0, -1.0}, {}}, s, 100.0), InputError);
}

TEST(MarketPotential, AgreesWithChoiceCoreOnDefaultSpec) {
  const auto spec = virtual_traveling_default();
  ChoiceScenario s;
  s.alternatives = {AttributeVector{{0.5, 105.0, 105.0, 3.0, 15.0}, {}}};
  s.includes_outside_option = true;
  const double p = choice_probabilities(spec.class_params[0], s)[0];
  EXPECT_NEAR(market_potential(spec.class_params[0], s, 10000.0), 10000.0 * p, 1e-9);
}

TEST(InvestmentRule, ThresholdBehaviour) {
  const ParameterVector p{{0.5, 0.1, -0.25}, {}};  // WTP(quality) = 2
  const auto invest = investment_rule(p, kSchema, 0, 1.0, 1.0);
  EXPECT_EQ(invest.ratio, 2.0);
  EXPECT_EQ(invest.recommendation, Recommendation::invest);
  EXPECT_STREQ(to_string(invest.recommendation), "INVEST");

  const auto reject = investment_rule(p, kSchema, 0, 0.4, 1.0);
  EXPECT_NEAR(reject.ratio, 0.8, 1e-15);
  EXPECT_EQ(reject.recommendation, Recommendation::reject);
  EXPECT_FALSE(reject.indifferent);

  const auto tie = investment_rule(p, kSchema, 0, 0.5, 1.0);
  EXPECT_EQ(tie.ratio, 1.0);
  EXPECT_EQ(tie.recommendation, Recommendation::reject);
  EXPECT_TRUE(tie.indifferent);
}

TEST(InvestmentRule, RejectsPriceAttributeAndInvalidModels) {
  EXPECT_THROW(investment_rule(ParameterVector{{0.5, 0.1, -0.25}, {}}, kSchema, 2, 1.0, 1.0), InputError);
  EXPECT_THROW(investment_rule(ParameterVector{{0.5, 0.1, 0.25}, {}}, kSchema, 0, 1.0, 1.0), EconomicValidityError);
}
