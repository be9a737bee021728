#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "choiceforge/choice_core.hpp"
#include "choiceforge/designer.hpp"
#include "choiceforge/sor_chain.hpp"

namespace choiceforge {

/// Ground truth for a synthetic market. One class with zero stddevs is a
/// homogeneous MNL population; several classes form a latent-class
/// population; non-zero `random_stddev` entries make those coefficients
/// normally distributed around `class_params[0]`. When `chain` is set the
/// choice utility runs through the construct chain and `class_params` is
/// unused.
struct GroundTruthSpec {
  std::string name;
  AttributeSchema schema;
  std::vector<Interval> bounds;
  std::vector<ParameterVector> class_params;
  std::vector<double> class_shares;
  std::vector<double> random_stddev;
  std::optional<CausalChain> chain;
  std::size_t n_alternatives = 2;
  bool outside_option = true;
  std::size_t levels_per_attribute = 5;
  std::uint64_t seed = 1;

  void validate() const;
  bool has_random_coefficients() const;
  std::vector<std::size_t> random_indices() const;
};

/// Sensing accuracy [0,1], downlink rate Mbps [10,200], latency ms
/// [10,200], hardware comfort [1,5], price [1,30]. The coefficients are
/// illustrative defaults, not estimates from any real market.
GroundTruthSpec virtual_traveling_default();

/// Named specs: virtual-traveling-default, virtual-traveling-two-class,
/// virtual-traveling-mixed, virtual-traveling-chain.
GroundTruthSpec named_spec(const std::string& name);
std::vector<std::string> named_spec_list();

/// Balanced level design: every (attribute, alternative-position) column
/// is a shuffled run of a cyclic level sequence, so each level appears
/// floor or ceil of n/levels times. No scenario has every non-price
/// attribute at its top level in every alternative.
std::vector<ChoiceScenario> generate_scenarios(const GroundTruthSpec& spec, std::size_t n_scenarios,
                                               std::size_t levels_per_attribute);

/// One synthetic consumer per scenario; consumer i draws from stream i of
/// the spec's seed, so the output is independent of thread count.
ChoiceDataset generate_dataset(const GroundTruthSpec& spec, const std::vector<ChoiceScenario>& scenarios);

enum class Estimator { mnl, latent_class, mixed_logit };

struct RecoveryOptions {
  int n_classes = 0;  // 0: number of classes in the spec
  std::size_t n_draws = 200;
  int latent_class_starts = 5;
};

struct RecoveryCoordinate {
  std::string name;
  double truth = 0.0;
  double estimate = 0.0;
  double standard_error = 0.0;
  double bias = 0.0;
  bool within_threshold = false;
  bool covered_95 = false;
};

struct RecoveryReport {
  Estimator estimator = Estimator::mnl;
  std::size_t n_observations = 0;
  std::vector<RecoveryCoordinate> coordinates;
  double log_likelihood = 0.0;
  bool comparable = true;  // false when the fitted structure differs from the truth
  bool pass = false;
};

/// generate -> fit -> compare. Thresholds: MNL coefficients within 3 SE;
/// latent-class shares within 0.05 and price coefficients within 3 SE;
/// mixed-logit means and stddevs within 0.1.
RecoveryReport recovery_report(const GroundTruthSpec& spec, Estimator estimator, std::size_t n_observations,
                               const RecoveryOptions& options = {});

}  // namespace choiceforge
