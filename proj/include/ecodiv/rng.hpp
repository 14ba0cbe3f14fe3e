#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace ecodiv {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for the stream identified by (seed, purpose, index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(mix64(seed) ^ purpose) ^ index);
}

namespace stream {
inline constexpr std::uint64_t kSubset = 0x5355425345540001ULL;
inline constexpr std::uint64_t kSegment = 0x5345474D454E0002ULL;
inline constexpr std::uint64_t kRedistribute = 0x5245444953540003ULL;
}  // namespace stream

// mt19937_64's output sequence is fixed by the standard, but the standard
// distributions and std::shuffle are not, so bounded draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ecodiv
