#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "choiceforge/choice_core.hpp"
#include "choiceforge/halton.hpp"

namespace choiceforge {

struct FitConfig {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  double beta_cap = 50.0;
  bool estimate_constants = false;
};

struct EstimationResult {
  ParameterVector params;
  double log_likelihood_at_optimum = 0.0;
  std::vector<double> standard_errors;  // aligned with ParameterLayout::pack(params)
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

/// Throws IdentificationError naming the first attribute that never varies
/// in a way the likelihood can see. An attribute is informative when it
/// differs between inside alternatives of some scenario, or, for data with
/// an outside option, when it takes more than one value across the data.
void check_identification(const ChoiceDataset& data);

EstimationResult fit_mnl(const ChoiceDataset& data, const FitConfig& config = {});

enum class HessianMethod { analytic, finite_difference };

/// Square roots of the diagonal of the inverse information matrix at
/// `params`. Throws SingularityError when the information is not positive
/// definite.
std::vector<double> standard_errors(const ParameterVector& params, const ChoiceDataset& data,
                                    HessianMethod method = HessianMethod::analytic);

/// Central differences of an analytic gradient, symmetrized. Returns the
/// negative Hessian (information) of the function whose gradient is given.
Eigen::MatrixXd finite_difference_information(
    const std::function<std::vector<double>(std::span<const double>)>& gradient, std::span<const double> at,
    double step = 1e-5);

/// sqrt(diag(info^-1)); SingularityError if info is not positive definite.
std::vector<double> standard_errors_from_information(const Eigen::MatrixXd& info);

// --- latent class -----------------------------------------------------------

struct LatentClassConfig {
  FitConfig fit;
  int max_em_iterations = 1000;
  double em_tolerance = 1e-8;
  int n_starts = 5;
  std::uint64_t seed = 1;
  double perturbation = 0.10;
  double degenerate_share = 1e-6;
};

struct LatentClassResult {
  std::vector<ParameterVector> class_params;  // sorted by descending price coefficient
  std::vector<double> class_shares;
  std::vector<double> log_likelihood_trace;
  double log_likelihood = 0.0;
  std::vector<std::vector<double>> class_standard_errors;
  std::vector<double> share_standard_errors;
  int iterations = 0;
  bool converged = false;
  bool degenerate_class_warning = false;
  int best_start = 0;
};

/// Mixture log-likelihood sum_n ln sum_c share_c P_c(y_n).
double latent_class_log_likelihood(const ChoiceDataset& data, const std::vector<ParameterVector>& class_params,
                                   const std::vector<double>& shares);

LatentClassResult fit_latent_class(const ChoiceDataset& data, int n_classes, const LatentClassConfig& config = {});

// --- mixed logit -------------------------------------------------------------

struct MixedLogitConfig {
  FitConfig fit;
  std::size_t n_draws = 100;
  std::uint64_t seed = 1;
  bool constrain_stddev_zero = false;
};

struct MixedLogitResult {
  ParameterVector mean_params;  // houses the mean betas and any constants
  std::vector<double> mean_betas;
  std::vector<double> stddev_betas;  // zero for non-random coefficients
  std::vector<std::size_t> random_indices;
  std::size_t draws_per_observation = 0;
  double simulated_log_likelihood = 0.0;
  std::vector<double> mean_standard_errors;
  std::vector<double> stddev_standard_errors;  // one per random coefficient
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

/// Simulated log-likelihood of a mixed logit at given means and standard
/// deviations (one per random coefficient).
double simulated_log_likelihood(const ChoiceDataset& data, const ParameterVector& means,
                                const std::vector<double>& stddevs, const std::vector<std::size_t>& random_indices,
                                const HaltonDrawOptions& draws);

/// `random_indices` empty means price-only randomness.
MixedLogitResult fit_mixed_logit(const ChoiceDataset& data, std::vector<std::size_t> random_indices,
                                 const MixedLogitConfig& config = {});

}  // namespace choiceforge
