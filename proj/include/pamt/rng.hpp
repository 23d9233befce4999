#pragma once

#include <cstdint>
#include <vector>

namespace pamt {

// Deterministic, implementation-independent RNG. std::mt19937_64 is portable
// but the std distributions are not; this generator plus the helpers below
// produce identical streams on every platform and compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix(seed ^ 0x9e3779b97f4a7c15ull)) {}

  std::uint64_t next_u64() {
    // xorshift64* on a splitmix-initialized state
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  // Unbiased integer in [0, bound) via rejection.
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t(0) - ~std::uint64_t(0) % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform double in [0, 1) with 53 bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in [-s, s).
  double uniform_sym(double s) { return (2.0 * uniform() - 1.0) * s; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = std::size_t(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t state_;
};

// Derives an independent sub-seed for a named purpose so one user-facing seed
// can drive several uncorrelated streams (split sampling, init, dropout, ...).
inline std::uint64_t subseed(std::uint64_t seed, std::uint64_t purpose) {
  return Rng::splitmix(seed * 0x9e3779b97f4a7c15ull + purpose * 0xb5297a4d3a2e3b47ull + 1);
}

}  // namespace pamt
