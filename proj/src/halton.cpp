#include "choiceforge/halton.hpp"

#include <numeric>

#include "choiceforge/errors.hpp"
#include "choiceforge/rng.hpp"

namespace choiceforge {

std::uint32_t nth_prime(std::size_t n) {
  std::uint32_t candidate = 2;
  std::size_t found = 0;
  for (;; ++candidate) {
    bool prime = true;
    for (std::uint32_t f = 2; f * f <= candidate; ++f) {
      if (candidate % f == 0) {
        prime = false;
        break;
      }
    }
    if (prime && found++ == n) return candidate;
  }
}

HaltonSequence::HaltonSequence(std::size_t n_dims, std::uint64_t seed, bool scrambled) {
  bases_.reserve(n_dims);
  permutations_.reserve(n_dims);
  for (std::size_t d = 0; d < n_dims; ++d) {
    const std::uint32_t base = nth_prime(d);
    bases_.push_back(base);
    std::vector<std::uint32_t> perm(base);
    std::iota(perm.begin(), perm.end(), 0u);
    if (scrambled) {
      CounterRng rng(seed, 0x4A1705ULL + d);
      for (std::uint32_t i = base - 1; i > 1; --i) {
        const auto j = 1 + static_cast<std::uint32_t>(rng.below(i));
        std::swap(perm[i], perm[j]);
      }
    }
    permutations_.push_back(std::move(perm));
  }
}

double HaltonSequence::value(std::uint64_t index, std::size_t dim) const {
  const std::uint32_t base = bases_.at(dim);
  const auto& perm = permutations_[dim];
  const double inv = 1.0 / base;
  double factor = inv;
  double out = 0.0;
  while (index > 0) {
    out += perm[index % base] * factor;
    index /= base;
    factor *= inv;
  }
  return out;
}

kernels::DrawSet halton_normal_draws(std::size_t n_obs, std::size_t n_dims, const HaltonDrawOptions& options) {
  if (options.n_draws < 1) throw InputError("at least one draw per observation is required");
  const HaltonSequence seq(n_dims, options.seed, options.scrambled);
  kernels::DrawSet draws;
  draws.n_obs = n_obs;
  draws.n_draws = options.n_draws;
  draws.n_dims = n_dims;
  draws.z.resize(n_obs * options.n_draws * n_dims);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n_obs); ++s) {
    const auto i = static_cast<std::size_t>(s);
    for (std::size_t r = 0; r < options.n_draws; ++r) {
      const std::uint64_t index = options.skip + 1 + i * options.n_draws + r;
      double* z = draws.z.data() + (i * options.n_draws + r) * n_dims;
      for (std::size_t d = 0; d < n_dims; ++d) z[d] = inverse_normal_cdf(seq.value(index, d));
    }
  }
  return draws;
}

}  // namespace choiceforge
