#pragma once

// Likelihood kernels over a flattened long-format design.
//
// Every kernel comes in two flavours: a `_serial` reference that walks the
// observations in order, and an OpenMP version that splits observations
// into fixed-size blocks, reduces each block serially and then sums block
// partials in block order. The block partition does not depend on the
// thread count, so parallel results are bit-identical for any number of
// workers; they agree with the serial reference up to summation rounding.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "choiceforge/choice_core.hpp"

namespace choiceforge::kernels {

inline constexpr std::size_t kBlockSize = 256;

struct LongDesign {
  std::size_t n_attributes = 0;
  std::vector<double> x;                  // row-major, one row per inside alternative
  std::vector<std::uint32_t> alt_index;   // inside-alternative position of each row
  std::vector<std::size_t> offsets;       // rows of observation i: [offsets[i], offsets[i+1])
  std::vector<std::uint8_t> has_outside;  // per observation
  std::vector<std::uint32_t> chosen;      // effective index; outside == number of inside rows

  static LongDesign from_dataset(const ChoiceDataset& data);

  std::size_t n_obs() const noexcept { return chosen.size(); }
  std::size_t rows_of(std::size_t obs) const noexcept { return offsets[obs + 1] - offsets[obs]; }
  const double* row(std::size_t r) const noexcept { return x.data() + r * n_attributes; }
};

struct LoglikGrad {
  double loglik = 0.0;
  std::vector<double> gradient;
};

/// Multinomial logit log-likelihood and gradient. `weights` is either empty
/// (unit weights) or one weight per observation.
LoglikGrad mnl_serial(const LongDesign& design, std::span<const double> theta,
                      const ParameterLayout& layout, std::span<const double> weights = {});
LoglikGrad mnl_parallel(const LongDesign& design, std::span<const double> theta,
                        const ParameterLayout& layout, std::span<const double> weights = {});

/// Negative Hessian of the (weighted) MNL log-likelihood.
Eigen::MatrixXd mnl_information(const LongDesign& design, std::span<const double> theta,
                                const ParameterLayout& layout, std::span<const double> weights = {});

/// ln P(chosen) for every observation.
std::vector<double> chosen_log_probabilities(const LongDesign& design, std::span<const double> theta,
                                             const ParameterLayout& layout);

/// Free parameters of a mixed logit: means (MNL layout) followed by one
/// standard deviation per random coefficient.
struct MixedLayout {
  ParameterLayout base;
  std::vector<std::size_t> random_indices;

  std::size_t size() const noexcept { return base.size() + random_indices.size(); }
};

/// Standard-normal draws laid out [observation][draw][random dimension].
struct DrawSet {
  std::size_t n_obs = 0;
  std::size_t n_draws = 0;
  std::size_t n_dims = 0;
  std::vector<double> z;

  const double* at(std::size_t obs, std::size_t draw) const noexcept {
    return z.data() + (obs * n_draws + draw) * n_dims;
  }
};

/// Simulated log-likelihood: each observation's probability is averaged
/// over its draws before taking the log.
LoglikGrad mixed_serial(const LongDesign& design, std::span<const double> theta,
                        const MixedLayout& layout, const DrawSet& draws);
LoglikGrad mixed_parallel(const LongDesign& design, std::span<const double> theta,
                          const MixedLayout& layout, const DrawSet& draws);

}  // namespace choiceforge::kernels
