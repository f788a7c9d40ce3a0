#pragma once

#include <cstdint>
#include <random>

namespace sigld {

// One splitmix64 step. Used to scramble seeds and derive worker streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Disjoint stream seeds for parallel work: stream k of a master seed.
// This is the documented splitting function; every module that fans out
// work (Monte Carlo trials, multistarts) derives per-worker seeds with it.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master + 0x9E3779B97F4A7C15ull * (index + 1);
  return splitmix64(s);
}

// mt19937_64 with portable draw helpers. std::mt19937_64 itself is fully
// specified by the standard; the distributions below avoid libstdc++-specific
// std::uniform_* so sequences are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(scramble(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1) with 53 random bits
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + uniform01() * (b - a); }

  // index in [0, n), n >= 1
  std::size_t uniform_index(std::size_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(gen_()) * n;
    return static_cast<std::size_t>(m >> 64);
  }

  bool coin() { return (gen_() >> 63) != 0; }

 private:
  static std::uint64_t scramble(std::uint64_t seed) {
    std::uint64_t s = seed;
    return splitmix64(s);
  }
  std::mt19937_64 gen_;
};

}  // namespace sigld
