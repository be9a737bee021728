#include "choiceforge/analytics.hpp"

#include "choiceforge/errors.hpp"

namespace choiceforge {

namespace {

double checked_price_coefficient(const ParameterVector& params, const AttributeSchema& schema) {
  params.validate(schema);
  const double bp = params.price_coefficient(schema);
  if (!(bp < 0.0)) {
    throw EconomicValidityError("price coefficient must be negative (got " + std::to_string(bp) +
                                "); demand would not slope downward");
  }
  return bp;
}

}  // namespace

WtpReport wtp(const ParameterVector& params, const AttributeSchema& schema) {
  WtpReport report;
  report.price_coefficient = checked_price_coefficient(params, schema);
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (k == schema.price_index) continue;
    report.per_attribute_wtp[schema.names[k]] = -params.betas[k] / report.price_coefficient;
  }
  return report;
}

double price_derivative(const ParameterVector& params, const AttributeSchema& schema, const ChoiceScenario& scenario,
                        std::size_t alt_index) {
  params.validate(schema);
  scenario.validate(schema);
  if (alt_index >= scenario.alternatives.size()) {
    throw InputError("alternative index " + std::to_string(alt_index) + " out of range");
  }
  const auto p = choice_probabilities(params, scenario);
  return params.price_coefficient(schema) * p[alt_index] * (1.0 - p[alt_index]);
}

double market_potential(const ParameterVector& params, const ChoiceScenario& scenario, double population_size) {
  if (!scenario.includes_outside_option) throw InputError("market potential needs a scenario with an outside option");
  if (!(population_size >= 0.0)) throw InputError("population size must be non-negative");
  const auto p = choice_probabilities(params, scenario);
  return population_size * (1.0 - p[scenario.outside_index()]);
}

InvestmentDecision investment_rule(const ParameterVector& params, const AttributeSchema& schema, std::size_t attribute,
                                   double delta_attribute, double delta_price) {
  const double bp = checked_price_coefficient(params, schema);
  if (attribute >= schema.size() || attribute == schema.price_index) {
    throw InputError("investment attribute must be a non-price attribute of the schema");
  }
  if (!(delta_price > 0.0)) throw InputError("price increase must be positive");

  InvestmentDecision d;
  d.wtp = -params.betas[attribute] / bp;
  d.monetized_benefit = d.wtp * delta_attribute;
  d.ratio = d.monetized_benefit / delta_price;
  d.indifferent = d.ratio == 1.0;
  d.recommendation = d.ratio > 1.0 ? Recommendation::invest : Recommendation::reject;
  return d;
}

const char* to_string(Recommendation r) noexcept { return r == Recommendation::invest ? "INVEST" : "REJECT"; }

}  // namespace choiceforge
