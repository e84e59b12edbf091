#pragma once

#include <cstdint>

namespace cmdp {

// Deterministic 64-bit generator (splitmix64). Hand-rolled rather than
// <random> so streams are identical across platforms and standard-library
// versions, which is what makes seeded runs replayable bit for bit.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Requires n > 0.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  bool next_bernoulli(double p) { return next_double() < p; }

 private:
  uint64_t state_;
};

// Derives an independent stream seed from a base seed and up to two keys.
// Every (state, action) sampling task and every episode gets its own stream,
// so results do not depend on execution order or thread count.
inline uint64_t substream_seed(uint64_t seed, uint64_t key_a, uint64_t key_b = 0) {
  auto fmix = [](uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  uint64_t h = fmix(seed + 0x9E3779B97F4A7C15ull);
  h = fmix(h ^ (key_a + 0xBF58476D1CE4E5B9ull));
  h = fmix(h ^ (key_b + 0x94D049BB133111EBull));
  return h;
}

}  // namespace cmdp
