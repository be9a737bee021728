#include "choiceforge/designer.hpp"

#include <algorithm>
#include <cmath>

#include "choiceforge/analytics.hpp"
#include "choiceforge/errors.hpp"
#include "choiceforge/optimizer.hpp"
#include "choiceforge/rng.hpp"

namespace choiceforge {

namespace {

// Systematic utility of a single offer is base + beta_price * price.
struct OfferModel {
  double base = 0.0;
  double beta_price = 0.0;

  double utility(double price) const noexcept { return base + beta_price * price; }
};

double logistic(double v) noexcept {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

OfferModel offer_model(const ParameterVector& params, const AttributeSchema& schema, std::span<const double> levels) {
  params.validate(schema);
  if (levels.size() != schema.size()) throw SchemaError("offer levels do not match schema");
  OfferModel m;
  m.base = params.constant(0);
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (k != schema.price_index) m.base += params.betas[k] * levels[k];
  }
  m.beta_price = params.price_coefficient(schema);
  if (!(m.beta_price < 0.0)) {
    throw EconomicValidityError("price coefficient must be negative for a bounded revenue maximum");
  }
  return m;
}

double margin_objective(const OfferModel& m, double cost, double price) {
  return (price - cost) * logistic(m.utility(price));
}

// Newton iterations on d/dp [(p - c) P(p)] = 0 starting from a golden-section
// estimate; only kept if it does not lower the objective.
ScalarOptimum polish(const OfferModel& m, double cost, const Interval& bounds, ScalarOptimum start) {
  if (start.x <= bounds.lower || start.x >= bounds.upper) return start;
  double p = start.x;
  const double b = m.beta_price;
  for (int it = 0; it < 30; ++it) {
    const double prob = logistic(m.utility(p));
    const double q = prob * (1.0 - prob);
    const double d1 = prob + (p - cost) * b * q;
    const double d2 = 2.0 * b * q + (p - cost) * b * b * q * (1.0 - 2.0 * prob);
    if (!(d2 < 0.0)) break;
    const double next = std::clamp(p - d1 / d2, bounds.lower, bounds.upper);
    const bool done = std::abs(next - p) <= 1e-15 * std::max(1.0, std::abs(p));
    p = next;
    if (done) break;
  }
  const double value = margin_objective(m, cost, p);
  if (value >= start.value - 1e-14 * std::abs(start.value)) return {p, value};
  return start;
}

ScalarOptimum search_price(const OfferModel& m, double cost, const Interval& bounds, const PriceSearchOptions& options,
                           bool audit) {
  const auto f = [&](double p) { return margin_objective(m, cost, p); };
  ScalarOptimum best = polish(m, cost, bounds, golden_section_maximize(f, bounds.lower, bounds.upper, options.tolerance));
  if (!audit || options.audit_points < 2 || bounds.width() <= 0.0) return best;

  const auto grid = price_grid(bounds, options.audit_points);
  std::size_t arg = 0;
  double grid_best = f(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = f(grid[i]);
    if (v > grid_best) {
      grid_best = v;
      arg = i;
    }
  }
  if (grid_best > best.value) {
    const Interval local{grid[arg == 0 ? 0 : arg - 1], grid[std::min(arg + 1, grid.size() - 1)]};
    ScalarOptimum refined = polish(m, cost, local, golden_section_maximize(f, local.lower, local.upper, options.tolerance));
    best = refined.value >= grid_best ? refined : ScalarOptimum{grid[arg], grid_best};
  }
  return best;
}

DesignSolution make_solution(const ParameterVector& params, const AttributeSchema& schema, std::vector<double> levels,
                             const Interval& price_bounds, double cost, DesignObjective objective,
                             const PriceSearchOptions& options) {
  const OfferModel m = offer_model(params, schema, levels);
  const ScalarOptimum opt = search_price(m, cost, price_bounds, options, true);
  DesignSolution s;
  s.price = opt.x;
  levels[schema.price_index] = opt.x;
  s.attribute_levels = std::move(levels);
  s.purchase_probability = logistic(m.utility(opt.x));
  s.objective = objective;
  s.unit_cost = cost;
  s.objective_value = (s.price - cost) * s.purchase_probability;
  if (options.curve_points >= 2 && price_bounds.width() > 0.0) {
    s.curve = revenue_curve(params, schema, s.attribute_levels, price_grid(price_bounds, options.curve_points));
  }
  return s;
}

}  // namespace

void DesignSpace::validate(const AttributeSchema& schema, DesignObjective objective) const {
  if (bounds.size() != schema.size()) throw SchemaError("design space needs one bound per schema attribute");
  if (!(price_bounds.lower <= price_bounds.upper)) throw InputError("design space is empty: price bounds inverted");
  if (price_bounds.lower < 0.0) throw InputError("price bounds must be non-negative");
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    if (k == schema.price_index) continue;
    if (!std::isfinite(bounds[k].lower) || !std::isfinite(bounds[k].upper) || !(bounds[k].lower <= bounds[k].upper)) {
      throw InputError("design space is empty for attribute '" + schema.names[k] + "'");
    }
  }
  if (!cost_coefficients.empty()) {
    if (cost_coefficients.size() != schema.size()) throw SchemaError("cost model needs one coefficient per attribute");
    for (double c : cost_coefficients) {
      if (!(c >= 0.0)) throw InputError("cost coefficients must be non-negative");
    }
  } else if (objective == DesignObjective::profit) {
    throw InputError("profit objective requires a cost model");
  }
}

double purchase_probability(const ParameterVector& params, const AttributeSchema& schema,
                            std::span<const double> levels, double price) {
  params.validate(schema);
  if (levels.size() != schema.size()) throw SchemaError("offer levels do not match schema");
  double v = params.constant(0) + params.price_coefficient(schema) * price;
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (k != schema.price_index) v += params.betas[k] * levels[k];
  }
  return logistic(v);
}

double unit_cost(const DesignSpace& space, const AttributeSchema& schema, std::span<const double> levels) {
  if (space.cost_coefficients.empty()) return 0.0;
  double c = 0.0;
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (k != schema.price_index) c += space.cost_coefficients[k] * levels[k];
  }
  return c;
}

std::vector<double> price_grid(const Interval& bounds, std::size_t n) {
  if (n < 2) throw InputError("price grid needs at least two points");
  if (!(bounds.lower < bounds.upper)) throw InputError("price grid needs lower < upper");
  std::vector<double> grid(n);
  const double step = bounds.width() / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) grid[i] = bounds.lower + step * static_cast<double>(i);
  grid.back() = bounds.upper;
  return grid;
}

std::vector<CurveSample> revenue_curve(const ParameterVector& params, const AttributeSchema& schema,
                                       std::span<const double> levels, std::span<const double> grid) {
  const OfferModel m = offer_model(params, schema, levels);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw InputError("price grid must be strictly increasing");
  }
  std::vector<CurveSample> curve;
  curve.reserve(grid.size());
  for (double p : grid) {
    CurveSample s;
    s.price = p;
    s.utility = m.utility(p);
    s.probability = logistic(s.utility);
    s.revenue = p * s.probability;
    curve.push_back(s);
  }
  return curve;
}

DesignSolution optimize_price(const ParameterVector& params, const AttributeSchema& schema,
                              std::span<const double> levels, const Interval& price_bounds,
                              const PriceSearchOptions& options) {
  if (!(price_bounds.lower <= price_bounds.upper) || price_bounds.lower < 0.0) {
    throw InputError("price bounds must satisfy 0 <= lower <= upper");
  }
  return make_solution(params, schema, std::vector<double>(levels.begin(), levels.end()), price_bounds, 0.0,
                       DesignObjective::revenue, options);
}

double design_objective_value(const ParameterVector& params, const AttributeSchema& schema, const DesignSpace& space,
                              DesignObjective objective, std::span<const double> levels, double price) {
  const double cost = objective == DesignObjective::profit ? unit_cost(space, schema, levels) : 0.0;
  return (price - cost) * purchase_probability(params, schema, levels, price);
}

DesignSolution optimize_design(const ParameterVector& params, const AttributeSchema& schema, const DesignSpace& space,
                               DesignObjective objective, const DesignSearchOptions& options) {
  space.validate(schema, objective);
  offer_model(params, schema, std::vector<double>(schema.size(), 0.0));  // validity of beta_price
  if (options.n_starts < 1) throw InputError("design search needs at least one start");

  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (k != schema.price_index && space.bounds[k].lower < space.bounds[k].upper) free.push_back(k);
  }

  // Best margin over price for given indicator levels.
  const auto profile = [&](const std::vector<double>& x) {
    const double cost = objective == DesignObjective::profit ? unit_cost(space, schema, x) : 0.0;
    return search_price(offer_model(params, schema, x), cost, space.price_bounds, options.price, false).value;
  };

  CounterRng rng(options.seed, 0xD351);
  std::vector<double> best_levels;
  double best_value = -INFINITY;
  for (std::size_t s = 0; s < options.n_starts; ++s) {
    std::vector<double> x(schema.size(), 0.0);
    for (std::size_t k = 0; k < schema.size(); ++k) {
      if (k == schema.price_index) continue;
      const Interval& b = space.bounds[k];
      x[k] = s == 0 ? 0.5 * (b.lower + b.upper) : (rng.below(2) == 0 ? b.lower : b.upper);
    }
    double value = profile(x);
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
      const double before = value;
      for (std::size_t k : free) {
        const Interval& b = space.bounds[k];
        const auto along = [&](double t) {
          std::vector<double> y = x;
          y[k] = t;
          return profile(y);
        };
        const ScalarOptimum opt = golden_section_maximize(along, b.lower, b.upper, 1e-9 * std::max(1.0, b.width()));
        if (opt.value > value) {
          x[k] = opt.x;
          value = opt.value;
        }
      }
      if (value - before < options.improvement_tolerance) break;
    }
    if (value > best_value) {
      best_value = value;
      best_levels = x;
    }
  }

  const double cost = objective == DesignObjective::profit ? unit_cost(space, schema, best_levels) : 0.0;
  return make_solution(params, schema, std::move(best_levels), space.price_bounds, cost, objective, options.price);
}

PremiumShareReport premium_share(const ParameterVector& params, const AttributeSchema& schema,
                                 const AttributeVector& base_offer, const AttributeVector& premium_offer,
                                 double population_size) {
  ChoiceScenario scenario;
  scenario.alternatives = {base_offer, premium_offer};
  scenario.includes_outside_option = true;
  params.validate(schema);
  scenario.validate(schema);
  if (!(population_size >= 0.0)) throw InputError("population size must be non-negative");

  const auto p = choice_probabilities(params, scenario);
  PremiumShareReport r;
  r.base_probability = p[0];
  r.premium_probability = p[1];
  r.outside_probability = p[2];
  r.base_adopters = population_size * p[0];
  r.premium_adopters = population_size * p[1];
  const WtpReport w = wtp(params, schema);
  for (std::size_t k = 0; k < schema.size(); ++k) {
    if (k == schema.price_index) continue;
    r.incremental_wtp += w.per_attribute_wtp.at(schema.names[k]) * (premium_offer.values[k] - base_offer.values[k]);
  }
  return r;
}

}  // namespace choiceforge
