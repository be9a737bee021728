#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "choiceforge/rng.hpp"

namespace choiceforge {

/// Names every attribute position and flags exactly one of them as price.
struct AttributeSchema {
  std::vector<std::string> names;
  std::size_t price_index = 0;

  /// Builds a schema whose price attribute is the one called `price_name`.
  static AttributeSchema with_price(std::vector<std::string> names,
                                    const std::string& price_name = "price");

  std::size_t size() const noexcept { return names.size(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
  const std::string& price_name() const { return names.at(price_index); }
  void validate() const;

  bool operator==(const AttributeSchema&) const = default;
};

/// One alternative's attribute levels. `constructs` holds observed latent
/// construct scores when the dataset carries any; it is empty otherwise.
struct AttributeVector {
  std::vector<double> values;
  std::vector<double> constructs;

  void validate(const AttributeSchema& schema) const;
};

/// Structural utility weights aligned to a schema plus per-alternative
/// constants. An empty constant list means every constant is zero and none
/// is estimated; otherwise the first entry is pinned to 0.
struct ParameterVector {
  std::vector<double> betas;
  std::vector<double> alternative_constants;

  double constant(std::size_t alt_index) const noexcept {
    return alt_index < alternative_constants.size() ? alternative_constants[alt_index] : 0.0;
  }
  double price_coefficient(const AttributeSchema& schema) const { return betas.at(schema.price_index); }
  void validate(const AttributeSchema& schema) const;

  /// Multiplies every coefficient and constant by `factor`.
  ParameterVector scaled(double factor) const;
};

/// Alternatives offered in one decision. When the outside option is
/// included it is the last effective alternative and has utility 0.
struct ChoiceScenario {
  std::vector<AttributeVector> alternatives;
  bool includes_outside_option = false;

  std::size_t effective_size() const noexcept {
    return alternatives.size() + (includes_outside_option ? 1 : 0);
  }
  std::size_t outside_index() const noexcept { return alternatives.size(); }
  void validate(const AttributeSchema& schema) const;
};

struct ChoiceObservation {
  ChoiceScenario scenario;
  std::size_t chosen_index = 0;
};

struct ChoiceDataset {
  AttributeSchema schema;
  std::vector<std::string> construct_names;
  std::vector<ChoiceObservation> observations;

  std::size_t size() const noexcept { return observations.size(); }
  bool empty() const noexcept { return observations.empty(); }
  std::size_t max_alternatives() const noexcept;
  void validate() const;
};

/// Maps a ParameterVector onto the flat vector of free parameters used by
/// the likelihood kernels and optimizers: all betas, then constants 1..J-1.
struct ParameterLayout {
  std::size_t n_attributes = 0;
  std::size_t n_constants = 0;  // free constants, i.e. alternatives - 1

  static ParameterLayout for_params(const ParameterVector& params);
  static ParameterLayout for_dataset(const ChoiceDataset& data, bool estimate_constants);

  std::size_t size() const noexcept { return n_attributes + n_constants; }
  std::vector<double> pack(const ParameterVector& params) const;
  ParameterVector unpack(std::span<const double> theta) const;
};

double systematic_utility(const ParameterVector& params, const AttributeVector& alt,
                          std::size_t alt_index);

/// Systematic utilities over the effective alternatives (outside option last).
std::vector<double> scenario_utilities(const ParameterVector& params, const ChoiceScenario& scenario);

/// Softmax with max-shift; safe for utilities of any finite magnitude.
std::vector<double> logit_probabilities(std::span<const double> utilities);

std::vector<double> choice_probabilities(const ParameterVector& params, const ChoiceScenario& scenario);

double log_likelihood(const ParameterVector& params, const ChoiceDataset& data);

/// Analytic gradient over the free parameters described by
/// ParameterLayout::for_params(params).
std::vector<double> log_likelihood_gradient(const ParameterVector& params, const ChoiceDataset& data);

/// Draws i.i.d. Gumbel noise for each effective alternative and returns the
/// utility-maximizing index.
std::size_t simulate_choice(const ParameterVector& params, const ChoiceScenario& scenario,
                            CounterRng& rng);

}  // namespace choiceforge
