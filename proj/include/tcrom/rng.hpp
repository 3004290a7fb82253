#pragma once

#include <cstdint>
#include <cmath>

namespace tcrom {

// Deterministic, portable random number generator (xoshiro256++ seeded via
// SplitMix64).  std::mt19937 + std::normal_distribution would not guarantee
// the same stream across standard library implementations, and bitwise
// reproducibility of generated datasets is part of the contract here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : s_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0,1) with 53 random bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [a,b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Marsaglia's polar method (second deviate cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, q;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    const double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection to avoid modulo bias.
    std::uint64_t x = next_u64();
    __uint128_t m = (__uint128_t)x * n;
    std::uint64_t l = (std::uint64_t)m;
    if (l < n) {
      std::uint64_t t = -n % n;
      while (l < t) {
        x = next_u64();
        m = (__uint128_t)x * n;
        l = (std::uint64_t)m;
      }
    }
    return (std::uint64_t)(m >> 64);
  }

  /// Independent generator derived from this one's seed path (used to give
  /// each module its own stream without coupling consumption orders).
  Rng fork(std::uint64_t stream) {
    std::uint64_t x = next_u64() ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    return Rng(splitmix64(x));
  }

  static std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tcrom
