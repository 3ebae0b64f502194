#pragma once

#include <cmath>
#include <cstdint>

namespace bhsse {

// Splittable counter-seeded RNG: the stream for trajectory k is a pure
// function of (master_seed, k), so parallel ensembles reproduce exactly
// regardless of scheduling. xoshiro256++ seeded through splitmix64,
// normals via Box-Muller. std::normal_distribution is implementation
// defined, so we roll our own to keep outputs stable.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64_next(sm);
    has_cached_ = false;
  }

  // Stream for worker k derived from a master seed.
  static Rng stream(std::uint64_t master_seed, std::uint64_t k) {
    std::uint64_t sm = master_seed;
    std::uint64_t a = splitmix64_next(sm);
    std::uint64_t mix = a ^ (k * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return Rng(mix);
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

  // Uniform in (0, 1]; never returns 0 so log() below is safe.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_;
};

}  // namespace bhsse
