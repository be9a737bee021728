#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "choiceforge/kernels.hpp"

namespace choiceforge {

/// The n-th prime, n starting at 0 (2, 3, 5, ...).
std::uint32_t nth_prime(std::size_t n);

/// Scrambled Halton sequence. Dimension d uses the d-th prime base and a
/// seeded random permutation of the non-zero digits (zero stays fixed so
/// the sequence remains in (0, 1)).
class HaltonSequence {
 public:
  HaltonSequence(std::size_t n_dims, std::uint64_t seed, bool scrambled = true);

  /// Point `index` in dimension `dim`; index 0 is skipped by callers since
  /// it maps to 0.
  double value(std::uint64_t index, std::size_t dim) const;

  std::size_t dims() const noexcept { return bases_.size(); }

 private:
  std::vector<std::uint32_t> bases_;
  std::vector<std::vector<std::uint32_t>> permutations_;
};

struct HaltonDrawOptions {
  std::size_t n_draws = 100;
  std::uint64_t seed = 0;
  std::size_t skip = 10;  // leading points discarded
  bool scrambled = true;
};

/// Standard-normal draws for each observation: observation i takes the
/// consecutive block [skip + i*R, skip + (i+1)*R) of the sequence.
kernels::DrawSet halton_normal_draws(std::size_t n_obs, std::size_t n_dims, const HaltonDrawOptions& options);

}  // namespace choiceforge
