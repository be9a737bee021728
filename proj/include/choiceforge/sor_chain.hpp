#pragma once

// Stimulus -> organism -> response chain: technical indicators feed observed
// construct scores through linear links, and the last constructs (plus
// price) enter the choice utility.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "choiceforge/choice_core.hpp"

namespace choiceforge {

struct LinearCausalLink {
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;
  Eigen::MatrixXd weights;       // outputs x inputs
  Eigen::VectorXd intercepts;    // one per output
  Eigen::VectorXd residual_stddev;

  Eigen::VectorXd apply(const Eigen::VectorXd& inputs) const;
  void validate() const;
};

/// Ordinary least squares with intercept, one regression per output column.
/// `inputs` is N x p, `outputs` is N x q. Throws CollinearityError naming
/// the dependent input columns.
LinearCausalLink fit_link(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                          std::vector<std::string> input_names, std::vector<std::string> output_names);

/// Links applied in order; `terminal_schema` is the final link's outputs plus
/// a price attribute and `terminal_params` is aligned with it.
struct CausalChain {
  std::vector<LinearCausalLink> links;
  AttributeSchema terminal_schema;
  ParameterVector terminal_params;

  void validate() const;
  const std::vector<std::string>& indicator_names() const { return links.front().input_names; }
};

/// Systematic utility of an offer with the given indicators and price
/// (mean predictions; residual noise excluded).
double propagate(const CausalChain& chain, const Eigen::VectorXd& indicators, double price);

/// The single affine map equal to applying `links` in order.
LinearCausalLink compose(const std::vector<LinearCausalLink>& links);

/// Marginal effect of each indicator on utility through the whole chain.
Eigen::VectorXd total_effects(const CausalChain& chain);

struct EffectDecomposition {
  std::string indicator;
  std::vector<std::string> path;     // one construct label per link
  std::vector<double> link_effects;  // per-link partial effects, then terminal weight
  double path_effect = 0.0;
  double total_effect = 0.0;         // summed over every path
};

/// `path` names the construct reached at each link, in order.
EffectDecomposition explain_effect(const CausalChain& chain, const std::string& indicator,
                                   const std::vector<std::string>& path);

/// Every indicator-to-utility path with its effect.
std::vector<EffectDecomposition> enumerate_paths(const CausalChain& chain);

}  // namespace choiceforge
