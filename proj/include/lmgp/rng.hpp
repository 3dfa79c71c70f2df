#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace lmgp {

// Deterministic RNG with substream derivation. Draws are hand-rolled so that
// output does not depend on the standard library's distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : gen_(mix(mix(seed) ^ (0x9e3779b97f4a7c15ULL + stream))) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = n * (UINT64_MAX / n);
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Marsaglia polar method (second draw cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  // splitmix64 finalizer; avoids correlated mt19937_64 states for nearby seeds.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Order-independent combination hash, used to derive per-key RNG substreams.
inline std::uint64_t fnv1a64(const int* data, std::size_t count, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t v = static_cast<std::uint64_t>(static_cast<std::int64_t>(data[i]));
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace lmgp
