#pragma once

#include <cstdint>

namespace choiceforge {

/// Counter-based generator: the n-th output of stream s under seed k is a
/// pure function of (k, s, n). Streams are derived per observation or per
/// block, so generation order and thread count never change the values.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(mix(mix(seed ^ 0x6A09E667F3BCC909ULL) ^ (stream * 0xBB67AE8584CAA73BULL + 1))) {}

  constexpr std::uint64_t next() noexcept { return at(counter_++); }

  constexpr std::uint64_t at(std::uint64_t index) const noexcept {
    return mix(key_ + index * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform in the open interval (0, 1); never returns 0 or 1.
  constexpr double uniform() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Standard normal via inverse CDF.
  double normal() noexcept;

  /// Standard Gumbel via inverse CDF, -ln(-ln u).
  double gumbel() noexcept;

  /// Child generator whose outputs are independent of this one's.
  constexpr CounterRng split(std::uint64_t stream) const noexcept {
    CounterRng child(key_, stream);
    return child;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    z = (z ^ (z >> 32)) * 0xD6E8FEB86659FD93ULL;
    return z ^ (z >> 32);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Inverse of the standard normal CDF for p in (0, 1).
double inverse_normal_cdf(double p) noexcept;

}  // namespace choiceforge
