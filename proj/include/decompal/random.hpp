#pragma once

#include <cstdint>
#include <random>

namespace decompal {

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a) {
  return mix64(master ^ mix64(a));
}

constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return stream_seed(stream_seed(master, a), b);
}

// Seeded generator with hand-rolled draws. The std:: distributions are
// implementation-defined, so they are avoided to keep runs bit-identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  // Standard normal via the Marsaglia polar method.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream for per-image draws in a given cycle.
inline Rng image_stream(std::uint64_t master, int cycle, std::uint64_t image) {
  return Rng(stream_seed(master, static_cast<std::uint64_t>(cycle), image));
}

}  // namespace decompal
