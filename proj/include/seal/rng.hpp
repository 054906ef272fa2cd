#pragma once

#include <cmath>
#include <cstdint>

namespace seal {

// splitmix64 stream. Chosen over <random> engines because its output is
// fully specified by the seed alone, which keeps simulation traces
// byte-identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without spare caching: every call consumes exactly two
  // uniforms, so the draw sequence does not depend on call history.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double gaussian(double sigma) { return sigma == 0.0 ? 0.0 : sigma * gaussian(); }

  int uniform_int(int n) {
    return n <= 1 ? 0 : static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream addressed by up to three tags (robot id, step, channel...). Streams
// derived this way are independent of evaluation order.
inline Rng derived_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
  return Rng(mix_seed(mix_seed(mix_seed(seed, a), b), c));
}

}  // namespace seal
