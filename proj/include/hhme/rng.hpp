#ifndef HHME_RNG_HPP
#define HHME_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace hhme::rng {

// murmur3-style 64-bit finalizer; full avalanche
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ engine. Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) {
    // expand the seed through splitmix64; guarantees a nonzero state
    for (auto& word : state_) word = splitmix64(seed);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_;
};

// Stream ids partition the seed space by purpose so that, e.g., population
// generation never shares a stream with replication draws.
enum class Stream : std::uint64_t {
  population = 1,
  replication = 2,
  misc = 3,
};

/// Independent child generator for (master seed, stream, index).
/// The mapping is pure: same triple, same generator state.
inline Xoshiro256pp child_rng(std::uint64_t master_seed, Stream stream,
                              std::uint64_t index) {
  std::uint64_t key = mix64(master_seed ^ 0x6a09e667f3bcc908ULL);
  key = mix64(key ^ (static_cast<std::uint64_t>(stream) * 0xd6e8feb86659fd93ULL));
  key = mix64(key ^ (index * 0xca5a826395121157ULL));
  return Xoshiro256pp(key);
}

/// Uniform double in [0, 1), 53-bit resolution.
template <class G>
double uniform01(G& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1); safe as a log() argument.
template <class G>
double uniform_open01(G& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) via Lemire's widening-multiply rejection.
template <class G>
std::uint64_t bounded(G& g, std::uint64_t bound) {
  using u128 = unsigned __int128;
  std::uint64_t x = g();
  u128 m = static_cast<u128>(x) * bound;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (lo < threshold) {
      x = g();
      m = static_cast<u128>(x) * bound;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Standard normal deviate, Box-Muller (cosine branch).
/// Platform-independent given the engine stream; two words consumed per call.
template <class G>
double normal(G& g) {
  const double u1 = uniform_open01(g);
  const double u2 = uniform01(g);
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace hhme::rng

#endif  // HHME_RNG_HPP
