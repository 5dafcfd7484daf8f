#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace deepmac {

// Mixes a 64-bit value into a well-distributed seed (splitmix64 step).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from (seed, stream id).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// Seeded generator with hand-rolled draw helpers. mt19937_64 output is
// specified by the standard, and the helpers below avoid the
// implementation-defined std::*_distribution classes, so a given seed
// reproduces the same sequence everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi], inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;  // hi >= lo; span 0 means full range
    if (span == 0) return eng_();
    // rejection sampling, no modulo bias
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % span);
    std::uint64_t draw;
    do {
      draw = eng_();
    } while (draw >= limit);
    return lo + draw % span;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Exponential with the given rate (events per unit time).
  double exponential(double rate) {
    return -std::log1p(-uniform()) / rate;
  }

  // Standard normal via Box-Muller (always consumes two draws).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace deepmac
