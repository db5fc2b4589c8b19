#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace psps {

/// Seedable xoshiro256** stream. Streams are derived from a master seed plus
/// an arbitrary key tuple (episode, line, purpose, ...) so that every consumer
/// owns an independent sequence and results do not depend on iteration order.
class Rng {
 public:
  Rng() : Rng(0x853c49e6748fea9bull, {}) {}

  Rng(std::uint64_t master, std::initializer_list<std::uint64_t> key) {
    std::uint64_t x = master;
    for (std::uint64_t k : key) {
      x ^= k + 0x9e3779b97f4a7c15ull;
      x = splitmix(x);
    }
    for (auto& s : s_) s = splitmix(x);
    // xoshiro must not start at the all-zero state.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[3] = 0x1ull;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (stateless across calls: draws two uniforms
  /// per sample; slightly wasteful but keeps the stream position predictable).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  static std::uint64_t splitmix(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t s_[4];
};

/// Stream-purpose tags; kept in one place so keyed streams never collide.
namespace stream {
constexpr std::uint64_t kFailure = 1;
constexpr std::uint64_t kAction = 2;
constexpr std::uint64_t kInit = 3;
constexpr std::uint64_t kDemandNoise = 4;
}  // namespace stream

}  // namespace psps
