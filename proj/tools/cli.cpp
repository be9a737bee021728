#include "cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <omp.h>

#include "CLI11.hpp"
#include "choiceforge/analytics.hpp"
#include "choiceforge/designer.hpp"
#include "choiceforge/errors.hpp"
#include "choiceforge/estimation.hpp"
#include "choiceforge/io.hpp"
#include "choiceforge/sor_chain.hpp"
#include "choiceforge/synth.hpp"
#include "report.hpp"

namespace choiceforge::cli {

namespace {

constexpr const char* kSeedEnv = "CHOICEFORGE_SEED";

std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t value) {
  if (flag->count() > 0) return value;
  if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || *end != '\0' || *env == '-') throw InputError(std::string(kSeedEnv) + " is not a seed: " + env);
    return v;
  }
  return 1;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::size_t attribute_index(const AttributeSchema& schema, const std::string& name) {
  const auto k = schema.index_of(name);
  if (!k) throw InputError("unknown attribute '" + name + "'");
  return *k;
}

std::vector<std::string> without_price(const AttributeSchema& schema) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (k != schema.price_index) out.push_back(schema.names[k]);
  }
  return out;
}

std::vector<double> mean_offer(const ChoiceDataset& data) {
  std::vector<double> sum(data.schema.size(), 0.0);
  std::size_t rows = 0;
  for (const auto& obs : data.observations) {
    for (const auto& alt : obs.scenario.alternatives) {
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += alt.values[k];
      ++rows;
    }
  }
  for (double& v : sum) v /= static_cast<double>(rows);
  return sum;
}

std::vector<double> head(const std::vector<double>& v, std::size_t n) {
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(n, v.size()))};
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
  return a;
}

Json params_json(const ParameterVector& params, const AttributeSchema& schema) {
  Json j = Json::object();
  j["betas"] = named_values(schema.names, params.betas);
  if (!params.alternative_constants.empty()) j["constants"] = numbers(params.alternative_constants);
  return j;
}

void write_json(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

void coefficient_table(std::ostream& text, const std::vector<std::string>& names, const std::vector<double>& est,
                       const std::vector<double>& se) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %16s %16s\n", "attribute", "estimate", "std_error");
  text << line;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const double s = k < se.size() ? se[k] : std::numeric_limits<double>::quiet_NaN();
    std::snprintf(line, sizeof(line), "%-24s %16.8g %16.8g\n", names[k].c_str(), est[k], s);
    text << line;
  }
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string spec;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::size_t levels = 0;
  std::size_t alternatives = 0;
  std::string out = "choices.csv";
  std::string truth = "truth.json";
  CLI::Option* seed_flag = nullptr;
};

Json truth_json(const GroundTruthSpec& spec, std::size_t n) {
  Json j;
  j["spec"] = spec.name;
  j["seed"] = spec.seed;
  j["n_observations"] = n;
  j["n_alternatives"] = spec.n_alternatives;
  j["outside_option"] = spec.outside_option;
  j["levels_per_attribute"] = spec.levels_per_attribute;
  j["schema"] = {{"attributes", spec.schema.names}, {"price", spec.schema.price_name()}};
  Json bounds = Json::object();
  for (std::size_t k = 0; k < spec.schema.size(); ++k) {
    bounds[spec.schema.names[k]] = {spec.bounds[k].lower, spec.bounds[k].upper};
  }
  j["bounds"] = bounds;
  if (spec.chain) {
    const CausalChain& chain = *spec.chain;
    Json links = Json::array();
    for (const auto& link : chain.links) {
      Json l;
      Json w = Json::object();
      for (std::size_t o = 0; o < link.output_names.size(); ++o) {
        std::vector<double> row(link.input_names.size());
        for (std::size_t i = 0; i < row.size(); ++i) {
          row[i] = link.weights(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
        }
        w[link.output_names[o]] = named_values(link.input_names, row);
      }
      l["weights"] = w;
      l["intercepts"] = named_values(link.output_names,
                                     {link.intercepts.data(), link.intercepts.data() + link.intercepts.size()});
      l["residual_stddev"] = named_values(
          link.output_names, {link.residual_stddev.data(), link.residual_stddev.data() + link.residual_stddev.size()});
      links.push_back(l);
    }
    j["chain"] = {{"links", links}, {"terminal", params_json(chain.terminal_params, chain.terminal_schema)}};
  } else {
    Json classes = Json::array();
    for (std::size_t c = 0; c < spec.class_params.size(); ++c) {
      Json cj = params_json(spec.class_params[c], spec.schema);
      cj["share"] = spec.class_shares[c];
      classes.push_back(cj);
    }
    j["classes"] = classes;
    if (spec.has_random_coefficients()) j["random_stddev"] = named_values(spec.schema.names, spec.random_stddev);
  }
  return j;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.n == 0) throw InputError("--n must be at least 1");
  GroundTruthSpec spec = named_spec(a.spec);
  spec.seed = resolve_seed(a.seed_flag, a.seed);
  if (a.levels > 0) spec.levels_per_attribute = a.levels;
  if (a.alternatives > 0) spec.n_alternatives = a.alternatives;
  spec.validate();

  const auto scenarios = generate_scenarios(spec, a.n, spec.levels_per_attribute);
  const ChoiceDataset data = generate_dataset(spec, scenarios);
  io::write_dataset_csv(a.out, data);
  write_json(a.truth, truth_json(spec, a.n));
  out << "simulated " << a.n << " observations from " << spec.name << " (seed " << spec.seed << ")\n"
      << "data  " << a.out << "\n"
      << "truth " << a.truth << "\n";
  return kSuccess;
}

// --- estimate ---------------------------------------------------------------

struct EstimateArgs {
  std::string data;
  std::string model = "mnl";
  int classes = 2;
  int starts = 5;
  std::size_t draws = 100;
  std::vector<std::string> random;
  bool constants = false;
  int max_iterations = 500;
  double tolerance = 1e-6;
  std::uint64_t seed = 1;
  std::string price_column = "price";
  std::string out = "report.json";
  std::string text;
  CLI::Option* seed_flag = nullptr;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  const ChoiceDataset data = io::read_dataset_csv_file(a.data, a.price_column);
  FitConfig fit;
  fit.max_iterations = a.max_iterations;
  fit.gradient_tolerance = a.tolerance;
  fit.estimate_constants = a.constants;
  const std::size_t n_attr = data.schema.size();

  Json j;
  j["model"] = a.model;
  j["schema"] = {{"attributes", data.schema.names}, {"price", data.schema.price_name()}};
  j["n_observations"] = data.size();
  std::ostringstream text;
  text << "model          " << a.model << "\n"
       << "observations   " << data.size() << "\n";

  bool converged = false;
  if (a.model == "mnl") {
    const EstimationResult r = fit_mnl(data, fit);
    const auto se = head(r.standard_errors, n_attr);
    j["betas"] = named_values(data.schema.names, r.params.betas);
    j["standard_errors"] = named_values(data.schema.names, se);
    if (!r.params.alternative_constants.empty()) {
      j["constants"] = numbers(r.params.alternative_constants);
      std::vector<double> cse{std::numeric_limits<double>::quiet_NaN()};
      for (std::size_t i = n_attr; i < r.standard_errors.size(); ++i) cse.push_back(r.standard_errors[i]);
      j["constant_standard_errors"] = numbers(cse);
    }
    j["log_likelihood"] = r.log_likelihood_at_optimum;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["gradient_norm"] = r.gradient_norm;
    converged = r.converged;
    text << "log_likelihood " << format_number(r.log_likelihood_at_optimum) << "\n";
    coefficient_table(text, data.schema.names, r.params.betas, se);
  } else if (a.model == "lcm") {
    LatentClassConfig cfg;
    cfg.fit = fit;
    cfg.n_starts = a.starts;
    cfg.seed = resolve_seed(a.seed_flag, a.seed);
    const LatentClassResult r = fit_latent_class(data, a.classes, cfg);
    const std::size_t k_count = r.class_params.size();
    std::vector<double> betas(n_attr, 0.0);
    for (std::size_t c = 0; c < k_count; ++c) {
      for (std::size_t k = 0; k < n_attr; ++k) betas[k] += r.class_shares[c] * r.class_params[c].betas[k];
    }
    std::vector<double> se(n_attr, std::numeric_limits<double>::quiet_NaN());
    if (k_count == 1) {
      betas = r.class_params[0].betas;
      se = head(r.class_standard_errors[0], n_attr);
    }
    j["betas"] = named_values(data.schema.names, betas);
    j["standard_errors"] = named_values(data.schema.names, se);
    if (k_count == 1 && !r.class_params[0].alternative_constants.empty()) {
      j["constants"] = numbers(r.class_params[0].alternative_constants);
    }
    Json classes = Json::array();
    for (std::size_t c = 0; c < k_count; ++c) {
      Json cj;
      cj["share"] = r.class_shares[c];
      cj["share_standard_error"] =
          std::isfinite(r.share_standard_errors[c]) ? Json(r.share_standard_errors[c]) : Json(nullptr);
      cj["betas"] = named_values(data.schema.names, r.class_params[c].betas);
      cj["standard_errors"] = named_values(data.schema.names, head(r.class_standard_errors[c], n_attr));
      if (!r.class_params[c].alternative_constants.empty()) {
        cj["constants"] = numbers(r.class_params[c].alternative_constants);
      }
      classes.push_back(cj);
    }
    j["classes"] = classes;
    j["log_likelihood"] = r.log_likelihood;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["best_start"] = r.best_start;
    j["degenerate_class_warning"] = r.degenerate_class_warning;
    j["log_likelihood_trace"] = numbers(r.log_likelihood_trace);
    converged = r.converged;
    text << "classes        " << k_count << "\n"
         << "log_likelihood " << format_number(r.log_likelihood) << "\n";
    if (r.degenerate_class_warning) text << "warning        a class share collapsed towards zero\n";
    for (std::size_t c = 0; c < k_count; ++c) {
      text << "class " << (c + 1) << " share " << format_number(r.class_shares[c]) << "\n";
      coefficient_table(text, data.schema.names, r.class_params[c].betas, head(r.class_standard_errors[c], n_attr));
    }
  } else {
    MixedLogitConfig cfg;
    cfg.fit = fit;
    cfg.n_draws = a.draws;
    cfg.seed = resolve_seed(a.seed_flag, a.seed);
    std::vector<std::size_t> random;
    for (const auto& name : a.random) random.push_back(attribute_index(data.schema, name));
    const MixedLogitResult r = fit_mixed_logit(data, random, cfg);
    std::vector<std::string> random_names;
    for (std::size_t idx : r.random_indices) random_names.push_back(data.schema.names[idx]);
    std::vector<double> sds;
    for (std::size_t idx : r.random_indices) sds.push_back(r.stddev_betas[idx]);
    const auto se = head(r.mean_standard_errors, n_attr);
    j["betas"] = named_values(data.schema.names, r.mean_betas);
    j["standard_errors"] = named_values(data.schema.names, se);
    if (!r.mean_params.alternative_constants.empty()) j["constants"] = numbers(r.mean_params.alternative_constants);
    j["random"] = random_names;
    j["stddevs"] = named_values(random_names, sds);
    j["stddev_standard_errors"] = named_values(random_names, r.stddev_standard_errors);
    j["draws"] = r.draws_per_observation;
    j["log_likelihood"] = r.simulated_log_likelihood;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["gradient_norm"] = r.gradient_norm;
    converged = r.converged;
    text << "draws          " << r.draws_per_observation << "\n"
         << "log_likelihood " << format_number(r.simulated_log_likelihood) << "\n";
    coefficient_table(text, data.schema.names, r.mean_betas, se);
    text << "random coefficient standard deviations\n";
    coefficient_table(text, random_names, sds, r.stddev_standard_errors);
  }
  j["reference_offer"] = named_values(data.schema.names, mean_offer(data));
  text << "converged      " << (converged ? "true" : "false") << "\n";

  write_json(a.out, j);
  if (!a.text.empty()) write_text_file(a.text, text.str());
  out << text.str();
  if (!converged) {
    err << "error: estimation did not converge; report written with converged=false\n";
    return kNotConverged;
  }
  return kSuccess;
}

// --- analyze ----------------------------------------------------------------

struct AnalyzeArgs {
  std::string report;
  std::vector<std::string> set;
  double population = 10000.0;
  std::string invest_attribute;
  double delta_attribute = 0.0;
  double delta_price = 0.0;
  std::string out = "analysis.json";
  std::string text;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const ModelReport m = read_model_report(a.report);
  const WtpReport w = wtp(m.params, m.schema);

  std::vector<double> offer = m.reference_offer;
  if (offer.empty()) offer.assign(m.schema.size(), 0.0);
  for (const auto& kv : a.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("--set expects name=value, got '" + kv + "'");
    offer[attribute_index(m.schema, kv.substr(0, eq))] = io::parse_double(kv.substr(eq + 1));
  }
  ChoiceScenario scenario;
  scenario.alternatives.push_back(AttributeVector{offer, {}});
  scenario.includes_outside_option = true;
  scenario.validate(m.schema);
  if (!(a.population >= 0.0) || !std::isfinite(a.population)) throw InputError("--population must be non-negative");

  const double probability = choice_probabilities(m.params, scenario)[0];
  const double derivative = price_derivative(m.params, m.schema, scenario, 0);
  const double potential = market_potential(m.params, scenario, a.population);
  const auto names = without_price(m.schema);

  Json j;
  j["model"] = m.model;
  j["price_attribute"] = m.schema.price_name();
  j["price_coefficient"] = w.price_coefficient;
  Json wj = Json::object();
  for (const auto& name : names) wj[name] = w.per_attribute_wtp.at(name);
  j["wtp"] = wj;
  j["reference_offer"] = named_values(m.schema.names, offer);
  j["purchase_probability"] = probability;
  j["price_derivative"] = derivative;
  j["population"] = a.population;
  j["market_potential"] = potential;

  std::ostringstream text;
  text << "price_coefficient " << format_number(w.price_coefficient) << "\n";
  for (const auto& name : names) text << "wtp " << name << " " << format_number(w.per_attribute_wtp.at(name)) << "\n";
  text << "purchase_probability " << format_number(probability) << "\n"
       << "price_derivative " << format_number(derivative) << "\n"
       << "market_potential " << format_number(potential) << "\n";

  if (!m.classes.empty()) {
    Json classes = Json::array();
    for (std::size_t c = 0; c < m.classes.size(); ++c) {
      Json cj;
      cj["share"] = m.classes[c].share;
      try {
        const WtpReport cw = wtp(m.classes[c].params, m.schema);
        Json cwj = Json::object();
        for (const auto& name : names) cwj[name] = cw.per_attribute_wtp.at(name);
        cj["wtp"] = cwj;
        for (const auto& name : names) {
          text << "class " << (c + 1) << " wtp " << name << " " << format_number(cw.per_attribute_wtp.at(name)) << "\n";
        }
      } catch (const EconomicValidityError&) {
        cj["wtp"] = nullptr;
        text << "class " << (c + 1) << " has a non-negative price coefficient; no WTP\n";
      }
      classes.push_back(cj);
    }
    j["classes"] = classes;
  }

  if (!a.invest_attribute.empty()) {
    const InvestmentDecision d = investment_rule(m.params, m.schema, attribute_index(m.schema, a.invest_attribute),
                                                 a.delta_attribute, a.delta_price);
    j["investment"] = {{"attribute", a.invest_attribute},
                       {"delta_attribute", a.delta_attribute},
                       {"delta_price", a.delta_price},
                       {"wtp", d.wtp},
                       {"monetized_benefit", d.monetized_benefit},
                       {"ratio", d.ratio},
                       {"recommendation", to_string(d.recommendation)},
                       {"indifferent", d.indifferent}};
    text << "investment " << a.invest_attribute << " " << to_string(d.recommendation) << " ratio "
         << format_number(d.ratio) << (d.indifferent ? " (indifferent)" : "") << "\n";
  }

  write_json(a.out, j);
  if (!a.text.empty()) write_text_file(a.text, text.str());
  out << text.str();
  return kSuccess;
}

// --- optimize ---------------------------------------------------------------

struct OptimizeArgs {
  std::string report;
  std::string design;
  std::string objective;
  std::size_t grid_points = 0;
  std::size_t starts = 0;
  std::uint64_t seed = 1;
  std::string out = "solution.json";
  std::string curve = "curve.csv";
  CLI::Option* seed_flag = nullptr;
};

struct DesignConfig {
  DesignSpace space;
  DesignObjective objective = DesignObjective::revenue;
  std::size_t grid_points = 101;
  std::size_t starts = 8;
  std::optional<std::uint64_t> seed;
};

DesignObjective parse_objective(const std::string& s) {
  if (s == "revenue") return DesignObjective::revenue;
  if (s == "profit") return DesignObjective::profit;
  throw InputError("objective must be 'revenue' or 'profit', got '" + s + "'");
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  const double v = io::parse_double(s);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) throw InputError(what + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

DesignConfig read_design(const std::string& path, const ModelReport& m) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError("cannot read design config: " + std::string(e.what()));
  }
  DesignConfig cfg;
  const std::size_t n = m.schema.size();
  cfg.space.bounds.assign(n, Interval{});
  cfg.space.cost_coefficients.assign(n, 0.0);
  std::vector<bool> bounded(n, false);
  bool have_lower = false;
  bool have_upper = false;

  const auto key_error = [&](const std::string& section, const std::string& key) {
    return InputError("design config " + path + ": unknown key '" + key + "' in [" + section + "]");
  };
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw InputError("design config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string value = node.data();
      if (section == "price") {
        if (key == "lower") {
          cfg.space.price_bounds.lower = io::parse_double(value);
          have_lower = true;
        } else if (key == "upper") {
          cfg.space.price_bounds.upper = io::parse_double(value);
          have_upper = true;
        } else {
          throw key_error(section, key);
        }
      } else if (section == "bounds") {
        const auto k = m.schema.index_of(key);
        if (!k || *k == m.schema.price_index) throw key_error(section, key);
        const auto parts = split(value, ',');
        if (parts.size() == 1) {
          const double v = io::parse_double(parts[0]);
          cfg.space.bounds[*k] = {v, v};
        } else if (parts.size() == 2) {
          cfg.space.bounds[*k] = {io::parse_double(parts[0]), io::parse_double(parts[1])};
        } else {
          throw InputError("design bound for '" + key + "' must be 'value' or 'lower, upper'");
        }
        bounded[*k] = true;
      } else if (section == "cost") {
        const auto k = m.schema.index_of(key);
        if (!k || *k == m.schema.price_index) throw key_error(section, key);
        cfg.space.cost_coefficients[*k] = io::parse_double(value);
      } else if (section == "optimize") {
        if (key == "objective") {
          cfg.objective = parse_objective(value);
        } else if (key == "grid_points") {
          cfg.grid_points = parse_count(value, "grid_points");
        } else if (key == "starts") {
          cfg.starts = parse_count(value, "starts");
        } else if (key == "seed") {
          cfg.seed = static_cast<std::uint64_t>(parse_count(value, "seed"));
        } else {
          throw key_error(section, key);
        }
      } else {
        throw InputError("design config " + path + ": unknown section [" + section + "]");
      }
    }
  }
  if (!have_lower || !have_upper) throw InputError("design config needs [price] lower and upper");
  for (std::size_t k = 0; k < n; ++k) {
    if (k == m.schema.price_index || bounded[k]) continue;
    if (m.reference_offer.empty()) {
      throw InputError("design config has no bounds for '" + m.schema.names[k] + "' and the report has no reference offer");
    }
    cfg.space.bounds[k] = {m.reference_offer[k], m.reference_offer[k]};
  }
  return cfg;
}

int cmd_optimize(const OptimizeArgs& a, std::ostream& out) {
  const ModelReport m = read_model_report(a.report);
  DesignConfig cfg = read_design(a.design, m);
  if (!a.objective.empty()) cfg.objective = parse_objective(a.objective);
  if (a.grid_points > 0) cfg.grid_points = a.grid_points;
  if (a.starts > 0) cfg.starts = a.starts;
  if (cfg.grid_points < 2) throw InputError("grid_points must be at least 2");

  DesignSearchOptions opts;
  opts.n_starts = cfg.starts;
  opts.seed = a.seed_flag->count() > 0 || !cfg.seed ? resolve_seed(a.seed_flag, a.seed) : *cfg.seed;
  opts.price.curve_points = cfg.grid_points;
  const DesignSolution s = optimize_design(m.params, m.schema, cfg.space, cfg.objective, opts);

  // The curve always spans the configured grid, even for a degenerate price box.
  const std::vector<CurveSample> curve =
      s.curve.size() == cfg.grid_points
          ? s.curve
          : revenue_curve(m.params, m.schema, s.attribute_levels,
                          std::vector<double>(cfg.grid_points, cfg.space.price_bounds.lower));

  std::string csv = "price,utility,probability,revenue\n";
  for (const auto& c : curve) {
    csv += io::format_significant(c.price, 9) + ',' + io::format_significant(c.utility, 9) + ',' +
           io::format_significant(c.probability, 9) + ',' + io::format_significant(c.revenue, 9) + '\n';
  }
  write_text_file(a.curve, csv);

  const char* objective = cfg.objective == DesignObjective::revenue ? "revenue" : "profit";
  Json j;
  j["objective"] = objective;
  j["price"] = s.price;
  j["attribute_levels"] = named_values(m.schema.names, s.attribute_levels);
  j["purchase_probability"] = s.purchase_probability;
  j["revenue"] = s.price * s.purchase_probability;
  j["unit_cost"] = s.unit_cost;
  j["objective_value"] = s.objective_value;
  j["grid_points"] = cfg.grid_points;
  j["starts"] = cfg.starts;
  j["seed"] = opts.seed;
  write_json(a.out, j);

  out << "objective            " << objective << "\n"
      << "price                " << format_number(s.price) << "\n";
  for (std::size_t k = 0; k < m.schema.size(); ++k) {
    if (k != m.schema.price_index) out << "level " << m.schema.names[k] << " " << format_number(s.attribute_levels[k]) << "\n";
  }
  out << "purchase_probability " << format_number(s.purchase_probability) << "\n"
      << "objective_value      " << format_number(s.objective_value) << "\n"
      << "curve                " << a.curve << " (" << curve.size() << " rows)\n";
  return kSuccess;
}

// --- chain ------------------------------------------------------------------

struct ChainArgs {
  std::string data;
  std::string stages;
  std::vector<std::string> indicators;
  std::string price_column = "price";
  std::string out = "chain.json";
  std::string text;
};

Json link_json(const LinearCausalLink& link) {
  Json l;
  l["inputs"] = link.input_names;
  l["outputs"] = link.output_names;
  Json w = Json::object();
  for (std::size_t o = 0; o < link.output_names.size(); ++o) {
    std::vector<double> row(link.input_names.size());
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = link.weights(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
    w[link.output_names[o]] = named_values(link.input_names, row);
  }
  l["weights"] = w;
  l["intercepts"] =
      named_values(link.output_names, {link.intercepts.data(), link.intercepts.data() + link.intercepts.size()});
  if (link.residual_stddev.size() > 0) {
    l["residual_stddev"] = named_values(
        link.output_names, {link.residual_stddev.data(), link.residual_stddev.data() + link.residual_stddev.size()});
  }
  return l;
}

int cmd_chain(const ChainArgs& a, std::ostream& out, std::ostream& err) {
  const ChoiceDataset data = io::read_dataset_csv_file(a.data, a.price_column);
  if (data.construct_names.empty()) throw InputError("dataset has no construct: columns");

  std::vector<std::vector<std::string>> stages;
  if (a.stages.empty()) {
    stages.push_back(data.construct_names);
  } else {
    for (const auto& stage : split(a.stages, ';')) stages.push_back(split(stage, ','));
  }
  std::map<std::string, std::size_t> construct_col;
  for (std::size_t c = 0; c < data.construct_names.size(); ++c) construct_col[data.construct_names[c]] = c;
  for (const auto& stage : stages) {
    if (stage.empty()) throw InputError("empty stage in --stages");
    for (const auto& name : stage) {
      if (!construct_col.count(name)) throw InputError("unknown construct '" + name + "' in --stages");
    }
  }
  const std::vector<std::string> indicators = a.indicators.empty() ? without_price(data.schema) : a.indicators;
  std::vector<std::size_t> indicator_cols;
  for (const auto& name : indicators) {
    const std::size_t k = attribute_index(data.schema, name);
    if (k == data.schema.price_index) throw InputError("price cannot be an indicator");
    indicator_cols.push_back(k);
  }

  std::size_t rows = 0;
  for (const auto& obs : data.observations) rows += obs.scenario.alternatives.size();
  const auto matrix = [&](const auto& cell, std::size_t cols) {
    Eigen::MatrixXd mtx(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    Eigen::Index r = 0;
    for (const auto& obs : data.observations) {
      for (const auto& alt : obs.scenario.alternatives) {
        for (std::size_t c = 0; c < cols; ++c) mtx(r, static_cast<Eigen::Index>(c)) = cell(alt, c);
        ++r;
      }
    }
    return mtx;
  };
  const auto stage_matrix = [&](const std::vector<std::string>& stage) {
    return matrix([&](const AttributeVector& alt, std::size_t c) { return alt.constructs[construct_col[stage[c]]]; },
                  stage.size());
  };

  CausalChain chain;
  Eigen::MatrixXd inputs =
      matrix([&](const AttributeVector& alt, std::size_t c) { return alt.values[indicator_cols[c]]; }, indicators.size());
  std::vector<std::string> input_names = indicators;
  for (const auto& stage : stages) {
    Eigen::MatrixXd outputs = stage_matrix(stage);
    chain.links.push_back(fit_link(inputs, outputs, input_names, stage));
    inputs = std::move(outputs);
    input_names = stage;
  }

  // Terminal choice model over the last stage's observed scores plus price.
  std::vector<std::string> terminal_names = stages.back();
  terminal_names.push_back(data.schema.price_name());
  ChoiceDataset terminal;
  terminal.schema = AttributeSchema::with_price(terminal_names, data.schema.price_name());
  terminal.observations.reserve(data.size());
  for (const auto& obs : data.observations) {
    ChoiceObservation t;
    t.chosen_index = obs.chosen_index;
    t.scenario.includes_outside_option = obs.scenario.includes_outside_option;
    for (const auto& alt : obs.scenario.alternatives) {
      AttributeVector v;
      for (const auto& name : stages.back()) v.values.push_back(alt.constructs[construct_col[name]]);
      v.values.push_back(alt.values[data.schema.price_index]);
      t.scenario.alternatives.push_back(std::move(v));
    }
    terminal.observations.push_back(std::move(t));
  }
  const EstimationResult fit = fit_mnl(terminal, FitConfig{});
  chain.terminal_schema = terminal.schema;
  chain.terminal_params = fit.params;

  const LinearCausalLink composed = compose(chain.links);
  const Eigen::VectorXd total = total_effects(chain);
  const auto paths = enumerate_paths(chain);

  Json j;
  j["indicators"] = indicators;
  Json links = Json::array();
  for (const auto& link : chain.links) links.push_back(link_json(link));
  j["links"] = links;
  Json term;
  term["schema"] = {{"attributes", terminal.schema.names}, {"price", terminal.schema.price_name()}};
  term["betas"] = named_values(terminal.schema.names, fit.params.betas);
  term["standard_errors"] = named_values(terminal.schema.names, head(fit.standard_errors, terminal.schema.size()));
  term["log_likelihood"] = fit.log_likelihood_at_optimum;
  term["converged"] = fit.converged;
  term["iterations"] = fit.iterations;
  j["terminal"] = term;
  Json comp = link_json(composed);
  comp.erase("residual_stddev");
  j["composed"] = comp;
  j["total_effects"] = named_values(indicators, {total.data(), total.data() + total.size()});
  Json pj = Json::array();
  for (const auto& p : paths) {
    pj.push_back({{"indicator", p.indicator},
                  {"path", p.path},
                  {"link_effects", numbers(p.link_effects)},
                  {"path_effect", p.path_effect}});
  }
  j["paths"] = pj;

  std::ostringstream text;
  text << "links " << chain.links.size() << ", terminal log_likelihood " << format_number(fit.log_likelihood_at_optimum)
       << "\n";
  coefficient_table(text, terminal.schema.names, fit.params.betas, head(fit.standard_errors, terminal.schema.size()));
  text << "total effect on utility\n";
  for (std::size_t i = 0; i < indicators.size(); ++i) {
    text << "  " << indicators[i] << " " << format_number(total[static_cast<Eigen::Index>(i)]) << "\n";
  }
  text << "paths\n";
  for (const auto& p : paths) {
    text << "  " << p.indicator;
    for (const auto& node : p.path) text << " -> " << node;
    text << " -> utility " << format_number(p.path_effect) << "\n";
  }

  write_json(a.out, j);
  if (!a.text.empty()) write_text_file(a.text, text.str());
  out << text.str();
  if (!fit.converged) {
    err << "error: terminal choice model did not converge\n";
    return kNotConverged;
  }
  return kSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"choiceforge: discrete choice simulation, estimation and service design"};
  app.name("choiceforge");
  app.set_config("--config", "", "INI file; [section] names match subcommands");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP worker count (0: runtime default)")->check(CLI::NonNegativeNumber);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic choice dataset");
  simulate->add_option("--spec", sim.spec, "Named ground-truth spec")->required();
  simulate->add_option("--n", sim.n, "Number of observations");
  sim.seed_flag = simulate->add_option("--seed", sim.seed, "Seed (falls back to CHOICEFORGE_SEED, then 1)");
  simulate->add_option("--levels", sim.levels, "Levels per attribute (default from spec)");
  simulate->add_option("--alternatives", sim.alternatives, "Inside alternatives per scenario (default from spec)");
  simulate->add_option("--out", sim.out, "Choice CSV path");
  simulate->add_option("--truth", sim.truth, "Ground-truth JSON path");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Fit a choice model to a dataset");
  estimate->add_option("--data", est.data, "Choice CSV")->required();
  estimate->add_option("--model", est.model, "mnl, lcm or mxl")->check(CLI::IsMember({"mnl", "lcm", "mxl"}));
  estimate->add_option("--classes", est.classes, "Latent classes (lcm)")->check(CLI::PositiveNumber);
  estimate->add_option("--starts", est.starts, "EM starts (lcm)")->check(CLI::PositiveNumber);
  estimate->add_option("--draws", est.draws, "Halton draws per observation (mxl)")->check(CLI::PositiveNumber);
  estimate->add_option("--random", est.random, "Random coefficients (mxl; default price)")->delimiter(',');
  estimate->add_flag("--constants", est.constants, "Estimate alternative-specific constants");
  estimate->add_option("--max-iterations", est.max_iterations)->check(CLI::PositiveNumber);
  estimate->add_option("--tolerance", est.tolerance, "Gradient norm tolerance")->check(CLI::PositiveNumber);
  est.seed_flag = estimate->add_option("--seed", est.seed, "Seed for EM starts and Halton scrambling");
  estimate->add_option("--price-column", est.price_column);
  estimate->add_option("--out", est.out, "Report JSON path");
  estimate->add_option("--text", est.text, "Also write the text report here");

  AnalyzeArgs ana;
  auto* analyze = app.add_subcommand("analyze", "WTP, price derivative and market potential");
  analyze->add_option("--report", ana.report, "Estimation report JSON")->required();
  analyze->add_option("--set", ana.set, "Override reference offer: name=value")->delimiter(',');
  analyze->add_option("--population", ana.population, "Population size for market potential");
  analyze->add_option("--invest-attribute", ana.invest_attribute, "Attribute for the investment rule");
  analyze->add_option("--delta-attribute", ana.delta_attribute, "Attribute improvement");
  analyze->add_option("--delta-price", ana.delta_price, "Price increase paying for it");
  analyze->add_option("--out", ana.out, "Analysis JSON path");
  analyze->add_option("--text", ana.text, "Also write the text report here");

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Choose price and indicator levels");
  optimize->add_option("--report", opt.report, "Estimation report JSON")->required();
  optimize->add_option("--design", opt.design, "Design-space INI")->required();
  optimize->add_option("--objective", opt.objective, "revenue or profit (overrides the design file)");
  optimize->add_option("--grid-points", opt.grid_points, "Curve rows (overrides the design file)");
  optimize->add_option("--starts", opt.starts, "Multi-start count (overrides the design file)");
  opt.seed_flag = optimize->add_option("--seed", opt.seed, "Seed for corner starts");
  optimize->add_option("--out", opt.out, "Solution JSON path");
  optimize->add_option("--curve", opt.curve, "Curve CSV path");

  ChainArgs ch;
  auto* chain = app.add_subcommand("chain", "Fit indicator -> construct -> choice chain");
  chain->add_option("--data", ch.data, "Choice CSV with construct: columns")->required();
  chain->add_option("--stages", ch.stages, "Construct stages, e.g. 'a;b,c' (default: one stage)");
  chain->add_option("--indicators", ch.indicators, "Indicator attributes (default: all but price)")->delimiter(',');
  chain->add_option("--price-column", ch.price_column);
  chain->add_option("--out", ch.out, "Chain report JSON path");
  chain->add_option("--text", ch.text, "Also write the text report here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  if (threads > 0) omp_set_num_threads(threads);
  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (estimate->parsed()) return cmd_estimate(est, out, err);
    if (analyze->parsed()) return cmd_analyze(ana, out);
    if (optimize->parsed()) return cmd_optimize(opt, out);
    if (chain->parsed()) return cmd_chain(ch, out, err);
  } catch (const IdentificationError& e) {
    err << "error: identification: " << e.what() << "\n";
    return kIdentification;
  } catch (const SeparationError& e) {
    err << "error: separation: " << e.what() << "\n";
    return kIdentification;
  } catch (const SingularityError& e) {
    err << "error: singular: " << e.what() << "\n";
    return kIdentification;
  } catch (const CollinearityError& e) {
    err << "error: collinear: " << e.what() << "\n";
    return kIdentification;
  } catch (const EconomicValidityError& e) {
    err << "error: economic validity: " << e.what() << "\n";
    return kEconomicValidity;
  } catch (const ChoiceError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInputError;
}

}  // namespace choiceforge::cli
