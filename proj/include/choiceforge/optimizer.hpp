#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace choiceforge {

/// Objective for the ascent routines: returns f(x) and writes grad f(x).
using SmoothObjective = std::function<double(std::span<const double> x, std::vector<double>& grad)>;

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // on the max-norm of grad f
  double max_step = 5.0;             // max-norm cap on a single trial step
  double armijo = 1e-4;
};

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> gradient;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

/// Maximizes a smooth function by BFGS with backtracking line search.
///
/// `initial_inverse_hessian`, when non-empty, seeds the inverse-curvature
/// approximation (e.g. the inverse information at the start point) and is
/// restored whenever the search direction stops being an ascent direction.
/// `guard` runs on every accepted iterate and may throw to abort the search.
BfgsResult maximize_bfgs(const SmoothObjective& objective, std::vector<double> x0, const BfgsOptions& options,
                         const Eigen::MatrixXd& initial_inverse_hessian = {},
                         const std::function<void(std::span<const double>)>& guard = {});

struct ScalarOptimum {
  double x = 0.0;
  double value = 0.0;
};

/// Golden-section search for the maximum of a unimodal function on
/// [lo, hi]; stops when the bracket is narrower than `tolerance`. The
/// endpoints are compared too, so monotone functions land on a bound.
ScalarOptimum golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                                      double tolerance);

}  // namespace choiceforge
