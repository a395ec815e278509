#pragma once

#include <cstdint>
#include <random>

namespace laf {

// Seeded generator behind every random weight and synthetic input.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Floats are formed from the top 24 bits of each 64-bit draw, so a
// seed yields the same stream on every platform. One draw per value.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  // Uniform in [0, 1) with 24-bit resolution.
  float uniform01() { return static_cast<float>(engine_() >> 40) * 0x1.0p-24f; }

  // Uniform in [-bound, bound).
  float symmetric(float bound) { return (2.0f * uniform01() - 1.0f) * bound; }

  // Double-precision uniform in [lo, hi), 53-bit resolution.
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  // Uniform integer in [lo, hi] (inclusive); modulo bias is negligible for small ranges.
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace laf
