#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gdqn {

// Seeded generator with portable bounded draws. std::uniform_*_distribution
// is implementation-defined, so golden files would not survive a change of
// standard library; these draws only depend on the mt19937_64 stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform real in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform real in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent seed for a named component from a master seed, so
// that components (net init, env, exploration, replay) can be varied without
// perturbing one another.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component);

}  // namespace gdqn
