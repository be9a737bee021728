#include "choiceforge/sor_chain.hpp"

#include <algorithm>
#include <cmath>

#include "choiceforge/errors.hpp"

namespace choiceforge {

namespace {

constexpr double kRidge = 1e-10;
constexpr double kDependenceTolerance = 1e-10;

std::size_t label_index(const std::vector<std::string>& labels, const std::string& name, const char* what) {
  const auto it = std::find(labels.begin(), labels.end(), name);
  if (it == labels.end()) throw InputError(std::string("unknown ") + what + " label '" + name + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

// Terminal beta for each output of the last link.
Eigen::VectorXd terminal_weights(const CausalChain& chain) {
  const auto& outputs = chain.links.back().output_names;
  Eigen::VectorXd w(static_cast<Eigen::Index>(outputs.size()));
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto k = chain.terminal_schema.index_of(outputs[i]);
    w[static_cast<Eigen::Index>(i)] = chain.terminal_params.betas[*k];
  }
  return w;
}

}  // namespace

Eigen::VectorXd LinearCausalLink::apply(const Eigen::VectorXd& inputs) const {
  if (inputs.size() != weights.cols()) throw SchemaError("link input has wrong dimension");
  return weights * inputs + intercepts;
}

void LinearCausalLink::validate() const {
  const auto q = static_cast<Eigen::Index>(output_names.size());
  const auto p = static_cast<Eigen::Index>(input_names.size());
  if (weights.rows() != q || weights.cols() != p || intercepts.size() != q ||
      (residual_stddev.size() != 0 && residual_stddev.size() != q)) {
    throw SchemaError("causal link shape does not match its labels");
  }
  if (!weights.allFinite() || !intercepts.allFinite()) throw InputError("causal link has non-finite entries");
  if (residual_stddev.size() != 0 && (residual_stddev.array() < 0.0).any()) {
    throw InputError("residual standard deviations must be non-negative");
  }
}

LinearCausalLink fit_link(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                          std::vector<std::string> input_names, std::vector<std::string> output_names) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index p = inputs.cols();
  const Eigen::Index q = outputs.cols();
  if (outputs.rows() != n) throw InputError("inputs and outputs must have the same number of rows");
  if (n < p + 1) throw InputError("need at least one more row than input columns");
  if (static_cast<Eigen::Index>(input_names.size()) != p || static_cast<Eigen::Index>(output_names.size()) != q) {
    throw SchemaError("label count does not match matrix columns");
  }

  const Eigen::RowVectorXd x_mean = inputs.colwise().mean();
  const Eigen::RowVectorXd y_mean = outputs.colwise().mean();
  const Eigen::MatrixXd xc = inputs.rowwise() - x_mean;
  const Eigen::MatrixXd yc = outputs.rowwise() - y_mean;
  Eigen::MatrixXd gram = xc.transpose() * xc;

  // Pivot-free Cholesky on the correlation-scaled Gram matrix; a vanishing
  // pivot means the column is spanned by the columns before it (or, with the
  // intercept, is constant).
  {
    Eigen::VectorXd scale(p);
    for (Eigen::Index j = 0; j < p; ++j) scale[j] = gram(j, j) > 0.0 ? 1.0 / std::sqrt(gram(j, j)) : 0.0;
    const Eigen::MatrixXd corr = scale.asDiagonal() * gram * scale.asDiagonal();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(p, p);
    std::vector<std::string> dependent;
    for (Eigen::Index j = 0; j < p; ++j) {
      double d = scale[j] > 0.0 ? corr(j, j) : 0.0;
      for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
      if (d < kDependenceTolerance) {
        dependent.push_back(input_names[static_cast<std::size_t>(j)]);
        continue;
      }
      l(j, j) = std::sqrt(d);
      for (Eigen::Index i = j + 1; i < p; ++i) {
        double s = scale[i] > 0.0 ? corr(i, j) : 0.0;
        for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        l(i, j) = s / l(j, j);
      }
    }
    if (!dependent.empty()) {
      std::string names;
      for (const auto& d : dependent) names += (names.empty() ? "" : ", ") + d;
      throw CollinearityError("input columns are linearly dependent on the intercept or earlier columns: " + names);
    }
  }

  gram.diagonal().array() += kRidge;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw SingularityError("normal equations could not be factorized");

  LinearCausalLink link;
  link.input_names = std::move(input_names);
  link.output_names = std::move(output_names);
  link.weights = llt.solve(xc.transpose() * yc).transpose();
  link.intercepts = (y_mean - x_mean * link.weights.transpose()).transpose();
  const Eigen::MatrixXd resid = yc - xc * link.weights.transpose();
  const double dof = static_cast<double>(std::max<Eigen::Index>(n - p - 1, 1));
  link.residual_stddev = (resid.colwise().squaredNorm().array() / dof).sqrt().transpose();
  return link;
}

void CausalChain::validate() const {
  if (links.empty()) throw InputError("causal chain has no links");
  for (std::size_t i = 0; i < links.size(); ++i) {
    links[i].validate();
    if (i > 0 && links[i].input_names != links[i - 1].output_names) {
      throw SchemaError("link " + std::to_string(i) + " inputs do not match the previous link's outputs");
    }
  }
  terminal_schema.validate();
  terminal_params.validate(terminal_schema);
  const auto& outputs = links.back().output_names;
  if (terminal_schema.size() != outputs.size() + 1) {
    throw SchemaError("terminal schema must hold the final constructs plus price");
  }
  for (const auto& name : outputs) {
    const auto k = terminal_schema.index_of(name);
    if (!k || *k == terminal_schema.price_index) {
      throw SchemaError("terminal schema is missing construct '" + name + "'");
    }
  }
}

double propagate(const CausalChain& chain, const Eigen::VectorXd& indicators, double price) {
  chain.validate();
  Eigen::VectorXd state = indicators;
  for (const auto& link : chain.links) state = link.apply(state);
  return chain.terminal_params.constant(0) + terminal_weights(chain).dot(state) +
         chain.terminal_params.price_coefficient(chain.terminal_schema) * price;
}

LinearCausalLink compose(const std::vector<LinearCausalLink>& links) {
  if (links.empty()) throw InputError("cannot compose an empty chain");
  LinearCausalLink out = links.front();
  out.validate();
  for (std::size_t i = 1; i < links.size(); ++i) {
    links[i].validate();
    if (links[i].input_names != out.output_names) throw SchemaError("links do not chain");
    out.intercepts = links[i].weights * out.intercepts + links[i].intercepts;
    out.weights = links[i].weights * out.weights;
    out.output_names = links[i].output_names;
  }
  out.residual_stddev = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out.output_names.size()));
  if (links.size() == 1) out.residual_stddev = links.front().residual_stddev;
  return out;
}

Eigen::VectorXd total_effects(const CausalChain& chain) {
  chain.validate();
  const LinearCausalLink composed = compose(chain.links);
  return composed.weights.transpose() * terminal_weights(chain);
}

EffectDecomposition explain_effect(const CausalChain& chain, const std::string& indicator,
                                   const std::vector<std::string>& path) {
  chain.validate();
  if (path.size() != chain.links.size()) {
    throw InputError("path must name one construct per link (" + std::to_string(chain.links.size()) + ")");
  }
  EffectDecomposition out;
  out.indicator = indicator;
  out.path = path;
  std::size_t from = label_index(chain.indicator_names(), indicator, "indicator");
  const std::size_t indicator_index = from;
  double effect = 1.0;
  for (std::size_t i = 0; i < chain.links.size(); ++i) {
    const std::size_t to = label_index(chain.links[i].output_names, path[i], "construct");
    const double w = chain.links[i].weights(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from));
    out.link_effects.push_back(w);
    effect *= w;
    from = to;
  }
  const double terminal = terminal_weights(chain)[static_cast<Eigen::Index>(from)];
  out.link_effects.push_back(terminal);
  out.path_effect = effect * terminal;
  out.total_effect = total_effects(chain)[static_cast<Eigen::Index>(indicator_index)];
  return out;
}

std::vector<EffectDecomposition> enumerate_paths(const CausalChain& chain) {
  chain.validate();
  std::vector<EffectDecomposition> out;
  std::vector<std::string> path;
  const auto recurse = [&](auto&& self, const std::string& indicator, std::size_t depth) -> void {
    if (depth == chain.links.size()) {
      out.push_back(explain_effect(chain, indicator, path));
      return;
    }
    for (const auto& label : chain.links[depth].output_names) {
      path.push_back(label);
      self(self, indicator, depth + 1);
      path.pop_back();
    }
  };
  for (const auto& indicator : chain.indicator_names()) recurse(recurse, indicator, 0);
  return out;
}

}  // namespace choiceforge
