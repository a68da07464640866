#ifndef TRAVNAV_RNG_HPP
#define TRAVNAV_RNG_HPP

#include <cmath>
#include <cstdint>

namespace travnav {

/// Deterministic, portable PRNG (xoshiro256++ seeded via splitmix64).
/// Used everywhere instead of <random> so that identical seeds give
/// identical byte streams across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) {
    uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  /// Independent stream derived from a base seed and a stream index.
  /// Streams with distinct indices are statistically independent, so
  /// per-sample streams can be consumed in any order (thread safety).
  static Rng stream(uint64_t base_seed, uint64_t stream_id) {
    return Rng(base_seed * 0x9e3779b97f4a7c15ULL + stream_id + 1);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (no cached second value, so draw
  /// order is exactly one pair of uniforms per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  /// Uniform point in the disk of given radius around the origin.
  void uniform_disk(double radius, double& dx, double& dy) {
    const double r = radius * std::sqrt(uniform());
    const double a = 6.283185307179586476925286766559 * uniform();
    dx = r * std::cos(a);
    dy = r * std::sin(a);
  }

 private:
  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
};

}  // namespace travnav

#endif  // TRAVNAV_RNG_HPP
