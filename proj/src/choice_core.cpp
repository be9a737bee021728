#include "choiceforge/choice_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "choiceforge/errors.hpp"
#include "choiceforge/kernels.hpp"

namespace choiceforge {

AttributeSchema AttributeSchema::with_price(std::vector<std::string> names, const std::string& price_name) {
  AttributeSchema schema;
  const auto it = std::find(names.begin(), names.end(), price_name);
  if (it == names.end()) throw SchemaError("schema has no price attribute named '" + price_name + "'");
  schema.price_index = static_cast<std::size_t>(it - names.begin());
  schema.names = std::move(names);
  schema.validate();
  return schema;
}

std::optional<std::size_t> AttributeSchema::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

void AttributeSchema::validate() const {
  if (names.empty()) throw SchemaError("schema has no attributes");
  if (price_index >= names.size()) throw SchemaError("price index outside schema");
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw SchemaError("attribute " + std::to_string(i) + " has an empty name");
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      if (names[i] == names[j]) throw SchemaError("duplicate attribute name '" + names[i] + "'");
    }
  }
}

void AttributeVector::validate(const AttributeSchema& schema) const {
  if (values.size() != schema.size()) {
    throw SchemaError("attribute vector has " + std::to_string(values.size()) + " values, schema expects " +
                      std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw InputError("attribute '" + schema.names[i] + "' is not finite");
  }
  for (double c : constructs) {
    if (!std::isfinite(c)) throw InputError("construct score is not finite");
  }
  if (values[schema.price_index] < 0.0) throw InputError("price must be non-negative");
}

void ParameterVector::validate(const AttributeSchema& schema) const {
  if (betas.size() != schema.size()) {
    throw SchemaError("parameter vector has " + std::to_string(betas.size()) + " betas, schema expects " +
                      std::to_string(schema.size()));
  }
  for (double b : betas) {
    if (!std::isfinite(b)) throw InputError("non-finite coefficient");
  }
  for (double c : alternative_constants) {
    if (!std::isfinite(c)) throw InputError("non-finite alternative constant");
  }
  if (!alternative_constants.empty() && alternative_constants.front() != 0.0) {
    throw InputError("first alternative constant must be 0");
  }
}

ParameterVector ParameterVector::scaled(double factor) const {
  ParameterVector out = *this;
  for (double& b : out.betas) b *= factor;
  for (double& c : out.alternative_constants) c *= factor;
  return out;
}

void ChoiceScenario::validate(const AttributeSchema& schema) const {
  if (alternatives.empty()) throw InputError("scenario has no alternatives");
  if (effective_size() < 2) throw InputError("scenario needs at least two effective alternatives");
  for (const auto& alt : alternatives) alt.validate(schema);
}

std::size_t ChoiceDataset::max_alternatives() const noexcept {
  std::size_t j = 0;
  for (const auto& obs : observations) j = std::max(j, obs.scenario.alternatives.size());
  return j;
}

void ChoiceDataset::validate() const {
  schema.validate();
  if (observations.empty()) throw InputError("dataset is empty");
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& obs = observations[i];
    obs.scenario.validate(schema);
    if (obs.chosen_index >= obs.scenario.effective_size()) {
      throw InputError("observation " + std::to_string(i) + " has chosen index out of range");
    }
    for (const auto& alt : obs.scenario.alternatives) {
      if (alt.constructs.size() != construct_names.size()) {
        throw SchemaError("observation " + std::to_string(i) + " construct count mismatch");
      }
    }
  }
}

ParameterLayout ParameterLayout::for_params(const ParameterVector& params) {
  ParameterLayout layout;
  layout.n_attributes = params.betas.size();
  layout.n_constants = params.alternative_constants.empty() ? 0 : params.alternative_constants.size() - 1;
  return layout;
}

ParameterLayout ParameterLayout::for_dataset(const ChoiceDataset& data, bool estimate_constants) {
  ParameterLayout layout;
  layout.n_attributes = data.schema.size();
  const std::size_t j = data.max_alternatives();
  layout.n_constants = (estimate_constants && j > 1) ? j - 1 : 0;
  return layout;
}

std::vector<double> ParameterLayout::pack(const ParameterVector& params) const {
  if (params.betas.size() != n_attributes) throw SchemaError("parameter vector does not match layout");
  std::vector<double> theta(params.betas);
  theta.reserve(size());
  for (std::size_t j = 1; j <= n_constants; ++j) theta.push_back(params.constant(j));
  return theta;
}

ParameterVector ParameterLayout::unpack(std::span<const double> theta) const {
  if (theta.size() != size()) throw SchemaError("free-parameter vector does not match layout");
  ParameterVector params;
  params.betas.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(n_attributes));
  if (n_constants > 0) {
    params.alternative_constants.assign(1, 0.0);
    params.alternative_constants.insert(params.alternative_constants.end(),
                                        theta.begin() + static_cast<std::ptrdiff_t>(n_attributes), theta.end());
  }
  return params;
}

double systematic_utility(const ParameterVector& params, const AttributeVector& alt, std::size_t alt_index) {
  if (params.betas.size() != alt.values.size()) {
    throw SchemaError("parameter/attribute length mismatch: " + std::to_string(params.betas.size()) + " vs " +
                      std::to_string(alt.values.size()));
  }
  double v = params.constant(alt_index);
  for (std::size_t k = 0; k < alt.values.size(); ++k) v += params.betas[k] * alt.values[k];
  return v;
}

std::vector<double> scenario_utilities(const ParameterVector& params, const ChoiceScenario& scenario) {
  std::vector<double> v;
  v.reserve(scenario.effective_size());
  for (std::size_t j = 0; j < scenario.alternatives.size(); ++j) {
    v.push_back(systematic_utility(params, scenario.alternatives[j], j));
  }
  if (scenario.includes_outside_option) v.push_back(0.0);
  return v;
}

std::vector<double> logit_probabilities(std::span<const double> utilities) {
  if (utilities.empty()) return {};
  const double vmax = *std::max_element(utilities.begin(), utilities.end());
  std::vector<double> p(utilities.size());
  double denom = 0.0;
  for (std::size_t j = 0; j < utilities.size(); ++j) {
    p[j] = std::exp(utilities[j] - vmax);
    denom += p[j];
  }
  for (double& pj : p) pj /= denom;
  return p;
}

std::vector<double> choice_probabilities(const ParameterVector& params, const ChoiceScenario& scenario) {
  const auto v = scenario_utilities(params, scenario);
  return logit_probabilities(v);
}

double log_likelihood(const ParameterVector& params, const ChoiceDataset& data) {
  if (data.empty()) throw InputError("log-likelihood of an empty dataset");
  const auto layout = ParameterLayout::for_params(params);
  if (params.betas.size() != data.schema.size()) throw SchemaError("parameter vector does not match dataset schema");
  const auto design = kernels::LongDesign::from_dataset(data);
  const auto theta = layout.pack(params);
  return kernels::mnl_parallel(design, theta, layout).loglik;
}

std::vector<double> log_likelihood_gradient(const ParameterVector& params, const ChoiceDataset& data) {
  if (data.empty()) throw InputError("gradient of an empty dataset");
  const auto layout = ParameterLayout::for_params(params);
  if (params.betas.size() != data.schema.size()) throw SchemaError("parameter vector does not match dataset schema");
  const auto design = kernels::LongDesign::from_dataset(data);
  const auto theta = layout.pack(params);
  return kernels::mnl_parallel(design, theta, layout).gradient;
}

std::size_t simulate_choice(const ParameterVector& params, const ChoiceScenario& scenario, CounterRng& rng) {
  const auto v = scenario_utilities(params, scenario);
  std::size_t best = 0;
  double best_u = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double u = v[j] + rng.gumbel();
    if (u > best_u) {
      best_u = u;
      best = j;
    }
  }
  return best;
}

}  // namespace choiceforge
