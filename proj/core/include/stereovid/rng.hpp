#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stereovid {

// Seeded RNG with hand-rolled value mapping. std::mt19937_64 output is fully
// specified by the standard; the distribution helpers below avoid the
// implementation-defined std <random> distributions so identical seeds give
// identical bytes on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform() * (static_cast<double>(hi) - lo + 1.0));
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer; used as a stateless coordinate hash.
inline std::uint64_t hash_mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hash of a (seed, a, b, c) coordinate tuple mapped to [0, 1).
inline double hash_unit(std::uint64_t seed, std::int64_t a, std::int64_t b,
                        std::int64_t c) {
  std::uint64_t h = hash_mix(seed ^ 0x6a09e667f3bcc909ULL);
  h = hash_mix(h ^ static_cast<std::uint64_t>(a));
  h = hash_mix(h ^ static_cast<std::uint64_t>(b));
  h = hash_mix(h ^ static_cast<std::uint64_t>(c));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace stereovid
