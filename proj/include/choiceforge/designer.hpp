#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "choiceforge/choice_core.hpp"

namespace choiceforge {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double width() const noexcept { return upper - lower; }
  bool contains(double v) const noexcept { return v >= lower && v <= upper; }
};

/// One point of a price sweep against the outside option.
struct CurveSample {
  double price = 0.0;
  double utility = 0.0;
  double probability = 0.0;
  double revenue = 0.0;
};

enum class DesignObjective { revenue, profit };

/// Bounds are indexed by schema position; the price slot is ignored in
/// favour of `price_bounds`. `cost_coefficients` (same indexing, price slot
/// ignored) maps indicator levels to a per-user cost.
struct DesignSpace {
  std::vector<Interval> bounds;
  Interval price_bounds;
  std::vector<double> cost_coefficients;

  void validate(const AttributeSchema& schema, DesignObjective objective) const;
};

struct DesignSolution {
  double price = 0.0;
  std::vector<double> attribute_levels;  // full schema vector, price slot == price
  double purchase_probability = 0.0;
  double objective_value = 0.0;
  DesignObjective objective = DesignObjective::revenue;
  double unit_cost = 0.0;
  std::vector<CurveSample> curve;
};

/// Probability that a consumer buys `offer` at `price` rather than nothing.
double purchase_probability(const ParameterVector& params, const AttributeSchema& schema,
                            std::span<const double> levels, double price);

/// Per-user cost of the indicator levels under a linear cost model.
double unit_cost(const DesignSpace& space, const AttributeSchema& schema, std::span<const double> levels);

/// Sweeps `price_grid` (strictly increasing) for a single offer against the
/// outside option. Throws EconomicValidityError if beta_price >= 0.
std::vector<CurveSample> revenue_curve(const ParameterVector& params, const AttributeSchema& schema,
                                       std::span<const double> levels, std::span<const double> price_grid);

/// `n` equally spaced prices covering `bounds` (n >= 2).
std::vector<double> price_grid(const Interval& bounds, std::size_t n);

struct PriceSearchOptions {
  double tolerance = 1e-6;       // golden-section bracket width
  std::size_t audit_points = 1000;
  std::size_t curve_points = 101;
};

/// Revenue-maximizing price for a fixed offer: golden-section search,
/// Newton polish on the first-order condition, and a grid audit that the
/// answer must not lose to.
DesignSolution optimize_price(const ParameterVector& params, const AttributeSchema& schema,
                              std::span<const double> levels, const Interval& price_bounds,
                              const PriceSearchOptions& options = {});

struct DesignSearchOptions {
  std::size_t n_starts = 8;
  std::uint64_t seed = 1;
  double improvement_tolerance = 1e-8;
  int max_sweeps = 200;
  PriceSearchOptions price;
};

/// Coordinate ascent over indicator levels with an inner price search,
/// restarted from the box centre and seeded corners; best start wins, ties
/// go to the lowest start index.
DesignSolution optimize_design(const ParameterVector& params, const AttributeSchema& schema, const DesignSpace& space,
                               DesignObjective objective, const DesignSearchOptions& options = {});

/// Objective of a design re-evaluated from scratch.
double design_objective_value(const ParameterVector& params, const AttributeSchema& schema, const DesignSpace& space,
                              DesignObjective objective, std::span<const double> levels, double price);

struct PremiumShareReport {
  double base_probability = 0.0;
  double premium_probability = 0.0;
  double outside_probability = 0.0;
  double base_adopters = 0.0;
  double premium_adopters = 0.0;
  double incremental_wtp = 0.0;  // sum_k WTP_k * (premium_k - base_k), non-price k
};

PremiumShareReport premium_share(const ParameterVector& params, const AttributeSchema& schema,
                                 const AttributeVector& base_offer, const AttributeVector& premium_offer,
                                 double population_size);

}  // namespace choiceforge
