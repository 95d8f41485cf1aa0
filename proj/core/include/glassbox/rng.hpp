#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace glassbox {

// Seeded PRNG used everywhere a result must be reproducible.
//
// Core generator is xoshiro256** (Blackman/Vigna), state filled from
// splitmix64 outputs of the seed.  Uniform doubles take the top 53 bits,
// bounded integers use rejection sampling, normals use Box-Muller.  All of
// this is pinned here, not delegated to <random> distributions, so the same
// seed yields the same stream on any platform.  Reports record the
// identity string below next to the seed.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "xoshiro256** seeded via splitmix64";

  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

  bool bernoulli(double p) { return next_double() < p; }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::bounded: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal() {
    double u1 = next_double();
    const double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent child stream derived from the original seed, not the current
  // state: stream(i) is the same generator no matter how much the parent has
  // been consumed.  Stream i is seeded with
  //   splitmix64(seed XOR (i + 1) * 0x9E3779B97F4A7C15).
  Rng stream(std::uint64_t index) const {
    std::uint64_t s = seed_ ^ ((index + 1) * 0x9E3779B97F4A7C15ULL);
    return Rng(splitmix64(s));
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
};

}  // namespace glassbox
