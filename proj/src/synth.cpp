#include "choiceforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "choiceforge/errors.hpp"
#include "choiceforge/estimation.hpp"
#include "choiceforge/rng.hpp"

namespace choiceforge {

namespace {

constexpr double kZ95 = 1.959963984540054;

std::vector<std::string> construct_labels(const CausalChain& chain) {
  std::vector<std::string> names;
  for (const auto& link : chain.links) names.insert(names.end(), link.output_names.begin(), link.output_names.end());
  return names;
}

std::size_t level_stream(std::size_t attribute, std::size_t position) { return 0x5CE0000 + attribute * 1024 + position; }

bool all_top(const GroundTruthSpec& spec, const ChoiceScenario& s) {
  for (const auto& alt : s.alternatives) {
    for (std::size_t k = 0; k < spec.schema.size(); ++k) {
      if (k != spec.schema.price_index && alt.values[k] != spec.bounds[k].upper) return false;
    }
  }
  return true;
}

LinearCausalLink make_link(std::vector<std::string> in, std::vector<std::string> out, Eigen::MatrixXd w,
                           Eigen::VectorXd b, Eigen::VectorXd sd) {
  LinearCausalLink link;
  link.input_names = std::move(in);
  link.output_names = std::move(out);
  link.weights = std::move(w);
  link.intercepts = std::move(b);
  link.residual_stddev = std::move(sd);
  return link;
}

}  // namespace

void GroundTruthSpec::validate() const {
  schema.validate();
  if (bounds.size() != schema.size()) throw InputError("spec needs one bound per attribute");
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    if (!(bounds[k].lower < bounds[k].upper)) throw InputError("bounds of '" + schema.names[k] + "' are not increasing");
  }
  if (bounds[schema.price_index].lower < 0.0) throw InputError("price bounds must be non-negative");
  if (n_alternatives < 1) throw InputError("spec needs at least one alternative");
  if (n_alternatives + (outside_option ? 1 : 0) < 2) throw InputError("spec needs two effective alternatives");
  if (levels_per_attribute < 2) throw InputError("at least two levels per attribute are required");
  if (chain) {
    chain->validate();
    std::vector<std::string> indicators;
    for (std::size_t k = 0; k < schema.size(); ++k) {
      if (k != schema.price_index) indicators.push_back(schema.names[k]);
    }
    if (chain->indicator_names() != indicators) throw SchemaError("chain inputs must be the non-price attributes");
    return;
  }
  if (class_params.empty() || class_params.size() != class_shares.size()) {
    throw InputError("spec needs class parameters with matching shares");
  }
  double total = 0.0;
  for (double s : class_shares) {
    if (!(s > 0.0)) throw InputError("class shares must be positive");
    total += s;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("class shares must sum to 1");
  for (const auto& p : class_params) p.validate(schema);
  if (!random_stddev.empty()) {
    if (random_stddev.size() != schema.size()) throw InputError("one stddev per attribute required");
    for (double s : random_stddev) {
      if (!(s >= 0.0)) throw InputError("stddevs must be non-negative");
    }
    if (class_params.size() > 1 && has_random_coefficients()) {
      throw InputError("random coefficients combine with a single class only");
    }
  }
}

bool GroundTruthSpec::has_random_coefficients() const {
  return std::any_of(random_stddev.begin(), random_stddev.end(), [](double s) { return s > 0.0; });
}

std::vector<std::size_t> GroundTruthSpec::random_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < random_stddev.size(); ++k) {
    if (random_stddev[k] > 0.0) idx.push_back(k);
  }
  return idx;
}

GroundTruthSpec virtual_traveling_default() {
  GroundTruthSpec spec;
  spec.name = "virtual-traveling-default";
  spec.schema = AttributeSchema::with_price({"sensing_accuracy", "downlink_rate", "latency", "hardware_comfort", "price"});
  spec.bounds = {{0.0, 1.0}, {10.0, 200.0}, {10.0, 200.0}, {1.0, 5.0}, {1.0, 30.0}};
  spec.class_params = {ParameterVector{{0.8, 0.01, -0.01, 0.3, -0.15}, {}}};
  spec.class_shares = {1.0};
  return spec;
}

GroundTruthSpec named_spec(const std::string& name) {
  GroundTruthSpec spec = virtual_traveling_default();
  if (name == "virtual-traveling-default") return spec;
  spec.name = name;
  if (name == "virtual-traveling-two-class") {
    spec.class_params = {ParameterVector{{0.8, 0.01, -0.01, 0.3, -0.9}, {}},
                         ParameterVector{{0.8, 0.01, -0.01, 0.3, -0.1}, {}}};
    spec.class_shares = {0.4, 0.6};
    return spec;
  }
  if (name == "virtual-traveling-mixed") {
    spec.class_params = {ParameterVector{{0.8, 0.01, -0.01, 0.3, -0.5}, {}}};
    spec.random_stddev = {0.0, 0.0, 0.0, 0.0, 0.2};
    return spec;
  }
  if (name == "virtual-traveling-chain") {
    const std::vector<std::string> indicators{"sensing_accuracy", "downlink_rate", "latency", "hardware_comfort"};
    Eigen::MatrixXd w1(1, 4);
    w1 << 1.0, 0.005, -0.005, 0.2;
    Eigen::MatrixXd w2(2, 1);
    w2 << 0.8, 0.5;
    CausalChain chain;
    chain.links.push_back(make_link(indicators, {"authenticity"}, w1, Eigen::VectorXd::Constant(1, 0.1),
                                    Eigen::VectorXd::Constant(1, 0.05)));
    chain.links.push_back(make_link({"authenticity"}, {"enjoyment", "involvement"}, w2, Eigen::Vector2d(0.5, 0.0),
                                    Eigen::Vector2d(0.05, 0.05)));
    chain.terminal_schema = AttributeSchema::with_price({"enjoyment", "involvement", "price"});
    chain.terminal_params = ParameterVector{{1.0, 0.6, -0.15}, {}};
    spec.chain = std::move(chain);
    spec.class_params.clear();
    spec.class_shares.clear();
    return spec;
  }
  throw InputError("unknown spec '" + name + "'");
}

std::vector<std::string> named_spec_list() {
  return {"virtual-traveling-default", "virtual-traveling-two-class", "virtual-traveling-mixed",
          "virtual-traveling-chain"};
}

std::vector<ChoiceScenario> generate_scenarios(const GroundTruthSpec& spec, std::size_t n_scenarios,
                                               std::size_t levels_per_attribute) {
  if (levels_per_attribute < 2) throw InputError("at least two levels per attribute are required");
  if (n_scenarios == 0) throw InputError("at least one scenario is required");
  spec.validate();
  const std::size_t n_alts = spec.n_alternatives;
  const std::size_t k_count = spec.schema.size();
  const std::size_t levels = levels_per_attribute;
  if (n_scenarios * n_alts < 2) throw InputError("too few scenario slots for attribute variation");

  std::vector<ChoiceScenario> scenarios(n_scenarios);
  for (auto& s : scenarios) {
    s.includes_outside_option = spec.outside_option;
    s.alternatives.assign(n_alts, AttributeVector{std::vector<double>(k_count), {}});
  }

  std::vector<std::size_t> column(n_scenarios);
  for (std::size_t k = 0; k < k_count; ++k) {
    const Interval& b = spec.bounds[k];
    for (std::size_t j = 0; j < n_alts; ++j) {
      for (std::size_t i = 0; i < n_scenarios; ++i) column[i] = (j * n_scenarios + i) % levels;
      CounterRng rng(spec.seed, level_stream(k, j));
      for (std::size_t i = n_scenarios; i > 1; --i) std::swap(column[i - 1], column[rng.below(i)]);
      for (std::size_t i = 0; i < n_scenarios; ++i) {
        const double t = static_cast<double>(column[i]) / static_cast<double>(levels - 1);
        scenarios[i].alternatives[j].values[k] = column[i] + 1 == levels ? b.upper : b.lower + t * (b.upper - b.lower);
      }
    }
  }

  // Swap a top-level entry of an all-top scenario with a lower entry from
  // the same column; column histograms are unchanged.
  const std::size_t fix_k = spec.schema.price_index == 0 ? 1 : 0;
  for (std::size_t i = 0; i < n_scenarios; ++i) {
    if (!all_top(spec, scenarios[i])) continue;
    bool fixed = false;
    for (std::size_t t = 0; t < n_scenarios && !fixed; ++t) {
      if (t == i) continue;
      for (std::size_t j = 0; j < n_alts && !fixed; ++j) {
        double& mine = scenarios[i].alternatives[j].values[fix_k];
        double& theirs = scenarios[t].alternatives[j].values[fix_k];
        if (theirs == spec.bounds[fix_k].upper) continue;
        std::swap(mine, theirs);
        if (all_top(spec, scenarios[t])) {
          std::swap(mine, theirs);
        } else {
          fixed = true;
        }
      }
    }
    if (!fixed) throw InputError("cannot avoid an uninformative all-top scenario with this design size");
  }
  return scenarios;
}

ChoiceDataset generate_dataset(const GroundTruthSpec& spec, const std::vector<ChoiceScenario>& scenarios) {
  spec.validate();
  if (scenarios.empty()) throw InputError("no scenarios to simulate");
  ChoiceDataset data;
  data.schema = spec.schema;
  if (spec.chain) data.construct_names = construct_labels(*spec.chain);
  data.observations.resize(scenarios.size());
  for (const auto& s : scenarios) s.validate(spec.schema);

  const std::size_t price = spec.schema.price_index;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(scenarios.size()); ++si) {
    const auto i = static_cast<std::size_t>(si);
    CounterRng rng(spec.seed, 0xC0A5000000ULL + i);
    ChoiceObservation& obs = data.observations[i];
    obs.scenario = scenarios[i];

    if (spec.chain) {
      const CausalChain& chain = *spec.chain;
      ChoiceScenario terminal;
      terminal.includes_outside_option = obs.scenario.includes_outside_option;
      for (auto& alt : obs.scenario.alternatives) {
        Eigen::VectorXd state(static_cast<Eigen::Index>(alt.values.size() - 1));
        for (std::size_t k = 0, m = 0; k < alt.values.size(); ++k) {
          if (k != price) state[static_cast<Eigen::Index>(m++)] = alt.values[k];
        }
        alt.constructs.clear();
        for (const auto& link : chain.links) {
          state = link.apply(state);
          for (Eigen::Index c = 0; c < state.size(); ++c) {
            state[c] += link.residual_stddev[c] * rng.normal();
            alt.constructs.push_back(state[c]);
          }
        }
        AttributeVector t;
        t.values.assign(chain.terminal_schema.size(), 0.0);
        const auto& outputs = chain.links.back().output_names;
        for (std::size_t c = 0; c < outputs.size(); ++c) {
          t.values[*chain.terminal_schema.index_of(outputs[c])] = state[static_cast<Eigen::Index>(c)];
        }
        t.values[chain.terminal_schema.price_index] = alt.values[price];
        terminal.alternatives.push_back(std::move(t));
      }
      obs.chosen_index = simulate_choice(chain.terminal_params, terminal, rng);
      continue;
    }

    std::size_t cls = 0;
    if (spec.class_params.size() > 1) {
      const double u = rng.uniform();
      double acc = 0.0;
      cls = spec.class_params.size() - 1;
      for (std::size_t c = 0; c < spec.class_params.size(); ++c) {
        acc += spec.class_shares[c];
        if (u < acc) {
          cls = c;
          break;
        }
      }
    }
    ParameterVector beta = spec.class_params[cls];
    for (std::size_t k = 0; k < spec.random_stddev.size(); ++k) {
      if (spec.random_stddev[k] > 0.0) beta.betas[k] += spec.random_stddev[k] * rng.normal();
    }
    obs.chosen_index = simulate_choice(beta, obs.scenario, rng);
  }
  return data;
}

RecoveryReport recovery_report(const GroundTruthSpec& spec, Estimator estimator, std::size_t n_observations,
                               const RecoveryOptions& options) {
  if (n_observations == 0) throw InputError("recovery needs at least one observation");
  spec.validate();
  if (spec.chain) throw InputError("recovery reports cover MNL, latent-class and mixed-logit specs");
  const auto data = generate_dataset(spec, generate_scenarios(spec, n_observations, spec.levels_per_attribute));

  RecoveryReport report;
  report.estimator = estimator;
  report.n_observations = n_observations;
  const auto& names = spec.schema.names;

  switch (estimator) {
    case Estimator::mnl: {
      const auto fit = fit_mnl(data);
      report.log_likelihood = fit.log_likelihood_at_optimum;
      report.comparable = spec.class_params.size() == 1 && !spec.has_random_coefficients();
      for (std::size_t k = 0; k < names.size(); ++k) {
        RecoveryCoordinate c;
        c.name = names[k];
        c.truth = spec.class_params[0].betas[k];
        c.estimate = fit.params.betas[k];
        c.standard_error = fit.standard_errors[k];
        c.bias = c.estimate - c.truth;
        c.within_threshold = std::abs(c.bias) <= 3.0 * c.standard_error;
        c.covered_95 = std::abs(c.bias) <= kZ95 * c.standard_error;
        report.coordinates.push_back(c);
      }
      break;
    }
    case Estimator::latent_class: {
      const int k = options.n_classes > 0 ? options.n_classes : static_cast<int>(spec.class_params.size());
      LatentClassConfig config;
      config.n_starts = options.latent_class_starts;
      config.seed = spec.seed;
      const auto fit = fit_latent_class(data, k, config);
      report.log_likelihood = fit.log_likelihood;
      report.comparable = static_cast<std::size_t>(k) == spec.class_params.size() && !spec.has_random_coefficients();
      if (!report.comparable) break;
      // Truth sorted the same way as the fit: descending price coefficient.
      std::vector<std::size_t> order(spec.class_params.size());
      std::iota(order.begin(), order.end(), 0);
      const std::size_t price = spec.schema.price_index;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return spec.class_params[a].betas[price] > spec.class_params[b].betas[price];
      });
      for (std::size_t c = 0; c < order.size(); ++c) {
        RecoveryCoordinate share;
        share.name = "class" + std::to_string(c + 1) + ".share";
        share.truth = spec.class_shares[order[c]];
        share.estimate = fit.class_shares[c];
        share.standard_error = fit.share_standard_errors[c];
        share.bias = share.estimate - share.truth;
        share.within_threshold = std::abs(share.bias) <= 0.05;
        share.covered_95 = std::abs(share.bias) <= kZ95 * share.standard_error;
        report.coordinates.push_back(share);

        RecoveryCoordinate bp;
        bp.name = "class" + std::to_string(c + 1) + "." + names[price];
        bp.truth = spec.class_params[order[c]].betas[price];
        bp.estimate = fit.class_params[c].betas[price];
        bp.standard_error = fit.class_standard_errors[c][price];
        bp.bias = bp.estimate - bp.truth;
        bp.within_threshold = std::abs(bp.bias) <= 3.0 * bp.standard_error;
        bp.covered_95 = std::abs(bp.bias) <= kZ95 * bp.standard_error;
        report.coordinates.push_back(bp);
      }
      break;
    }
    case Estimator::mixed_logit: {
      MixedLogitConfig config;
      config.n_draws = options.n_draws;
      config.seed = spec.seed;
      auto random = spec.random_indices();
      const auto fit = fit_mixed_logit(data, random, config);
      report.log_likelihood = fit.simulated_log_likelihood;
      report.comparable = spec.class_params.size() == 1;
      if (!report.comparable) break;
      for (std::size_t d = 0; d < fit.random_indices.size(); ++d) {
        const std::size_t k = fit.random_indices[d];
        RecoveryCoordinate mean;
        mean.name = names[k] + ".mean";
        mean.truth = spec.class_params[0].betas[k];
        mean.estimate = fit.mean_betas[k];
        mean.standard_error = fit.mean_standard_errors[k];
        mean.bias = mean.estimate - mean.truth;
        mean.within_threshold = std::abs(mean.bias) <= 0.1;
        mean.covered_95 = std::abs(mean.bias) <= kZ95 * mean.standard_error;
        report.coordinates.push_back(mean);

        RecoveryCoordinate sd;
        sd.name = names[k] + ".stddev";
        sd.truth = spec.random_stddev.empty() ? 0.0 : spec.random_stddev[k];
        sd.estimate = fit.stddev_betas[k];
        sd.standard_error = fit.stddev_standard_errors[d];
        sd.bias = sd.estimate - sd.truth;
        sd.within_threshold = std::abs(sd.bias) <= 0.1;
        sd.covered_95 = std::abs(sd.bias) <= kZ95 * sd.standard_error;
        report.coordinates.push_back(sd);
      }
      break;
    }
  }
  report.pass = report.comparable && !report.coordinates.empty() &&
                std::all_of(report.coordinates.begin(), report.coordinates.end(),
                            [](const RecoveryCoordinate& c) { return c.within_threshold; });
  return report;
}

}  // namespace choiceforge
