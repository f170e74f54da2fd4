#pragma once

#include <cmath>
#include <cstdint>

namespace homlab {

// splitmix64 finalizer. Used both as the generator step and for seed mixing.
constexpr uint64_t SplitMix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a stream index.
// Every parallel consumer (per-sample generation, per-layer init) gets its
// own Rng(Mix(seed, index)) so results do not depend on thread scheduling.
constexpr uint64_t Mix(uint64_t seed, uint64_t index) {
  return SplitMix64(seed + 0x9E3779B97F4A7C15ull * (index + 1));
}

constexpr uint64_t Mix(uint64_t seed, uint64_t a, uint64_t b) {
  return Mix(Mix(seed, a), b);
}

// Small deterministic PRNG (splitmix64). All randomness in the project goes
// through this type; std:: distributions are avoided because their output is
// implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t NextU64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return SplitMix64(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [lo, hi], inclusive.
  int64_t UniformInt(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(NextU64() % span);
  }

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double Gaussian() {
    const double u1 = 1.0 - Uniform();  // (0, 1], keeps log() finite
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

 private:
  uint64_t state_;
};

}  // namespace homlab
