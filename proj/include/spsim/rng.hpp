#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spsim::rng {

inline constexpr double kPi = 3.14159265358979323846;

// splitmix64 step; used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent substream seed from (seed, stream).
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  const std::uint64_t h = splitmix64(s);
  s = stream ^ h;
  return splitmix64(s);
}

// Deterministic random stream. All draws are pure functions of the seed,
// with a counted number of generator outputs per draw (uniform: 1,
// normal: 2), so substreams can be reproduced independently of each other.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1); 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, cosine branch.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

  // Knuth's product method; fine for the small rates used here.
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    double p = 1.0;
    int k = 0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace spsim::rng
