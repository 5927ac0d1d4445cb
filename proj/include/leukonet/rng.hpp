#pragma once

#include <cstdint>
#include <utility>

namespace leukonet {

/// splitmix64 finalizer. Bijective, strong avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream keyed by (seed, stream, lane).
///
/// Every value is a pure function of the key and the draw counter, so
/// independent consumers (one stream per augmented sample, per parameter,
/// per epoch...) see identical values no matter how work is scheduled.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0,
                      std::uint64_t lane = 0) {
    state_ = mix64(seed + 0x9e3779b97f4a7c15ULL);
    state_ = mix64(state_ ^ (stream + 0x9e3779b97f4a7c15ULL));
    state_ = mix64(state_ ^ (lane + 0x9e3779b97f4a7c15ULL));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Unbiased integer in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % bound;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  /// Fisher-Yates. Self-contained so shuffles are reproducible across
  /// standard library implementations.
  template <typename RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      const auto j = static_cast<decltype(i)>(below(static_cast<std::uint64_t>(i) + 1));
      using std::swap;
      swap(first[i], first[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace leukonet
