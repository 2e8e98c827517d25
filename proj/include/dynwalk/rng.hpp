#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dynwalk {

/// Stream tags keep independent uses of one (seed, replica) pair apart.
enum class StreamTag : std::uint64_t {
  Graph = 1,
  Simulation = 2,
  Environment = 3,
  Candidate = 4,
  InitialState = 5,
  Discrete = 6,
  Auxiliary = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based derivation: the same (seed, replica, tag) always yields the
/// same stream seed, and distinct triples give statistically independent ones.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replica, StreamTag tag) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(replica + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(tag) * 0xd1b54a32d192ed03ULL));
  return h;
}

/// 64-bit Mersenne twister with platform-independent derived draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t replica, StreamTag tag) : engine_(derive_seed(seed, replica, tag)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on the open interval (0,1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), bound > 0 (Lemire's nearly-divisionless method).
  std::uint64_t below(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  bool bernoulli(double prob) { return uniform() <= prob; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dynwalk
