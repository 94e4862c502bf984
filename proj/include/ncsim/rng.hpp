#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ncsim {

// Deterministic RNG wrapper. All distributions are implemented here rather
// than with std:: distribution objects, whose output is not pinned by the
// standard; output must be reproducible byte-for-byte across toolchains.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(mix(seed)) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in {0, 1, ..., n-1}, rejection-sampled to avoid modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }

  // splitmix64 finalizer; also used to derive per-replication seeds.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

private:
  std::mt19937_64 eng_;
};

} // namespace ncsim
