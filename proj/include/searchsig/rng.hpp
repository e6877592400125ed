#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace searchsig {

/// Counter-based SplitMix64 generator. The i-th draw is a pure function of
/// (key, i), so streams are portable across platforms and cheap to split.
/// Distributions are implemented here rather than taken from <random>,
/// whose distribution algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n); unbiased. n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one value per two uniforms, no caching).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const;

  std::uint64_t key() const { return key_; }

 private:
  struct FromKey {};
  Rng(FromKey, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

/// Fisher-Yates, drawing j uniformly from [0, i] for i = n-1 .. 1.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace searchsig
