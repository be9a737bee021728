#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "choiceforge/choice_core.hpp"

namespace choiceforge {

/// Willingness to pay per non-price attribute, in currency per attribute unit.
struct WtpReport {
  std::map<std::string, double> per_attribute_wtp;
  double price_coefficient = 0.0;
};

/// WTP_k = -beta_k / beta_price. Throws EconomicValidityError unless the
/// price coefficient is strictly negative.
WtpReport wtp(const ParameterVector& params, const AttributeSchema& schema);

/// d P_i / d price_i = beta_price * P_i * (1 - P_i).
double price_derivative(const ParameterVector& params, const AttributeSchema& schema,
                        const ChoiceScenario& scenario, std::size_t alt_index);

/// Expected adopters: population * (1 - P(outside)).
double market_potential(const ParameterVector& params, const ChoiceScenario& scenario, double population_size);

enum class Recommendation { invest, reject };

struct InvestmentDecision {
  double wtp = 0.0;
  double monetized_benefit = 0.0;  // wtp * delta_attribute
  double ratio = 0.0;              // monetized_benefit / delta_price
  Recommendation recommendation = Recommendation::reject;
  bool indifferent = false;        // ratio exactly 1
};

/// Invest when the monetized attribute gain exceeds the price increase it
/// costs, i.e. ratio > 1. A ratio of exactly 1 is rejected and flagged.
InvestmentDecision investment_rule(const ParameterVector& params, const AttributeSchema& schema,
                                   std::size_t attribute, double delta_attribute, double delta_price);

const char* to_string(Recommendation r) noexcept;

}  // namespace choiceforge
