#pragma once

#include <cmath>
#include <cstdint>

namespace burstsr {

// Deterministic 64-bit generator (splitmix64). Used everywhere randomness is
// needed so results depend only on the seed, not on the standard library's
// distribution implementations.
struct SplitMix64 {
  uint64_t state = 0;

  explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

  uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // [0, 1), 53 uniform mantissa bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Box-Muller; u1 shifted away from zero so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Independent child stream, stable under reordering of the call sites.
inline SplitMix64 derive_stream(uint64_t seed, uint64_t tag, uint64_t index) {
  SplitMix64 g(seed ^ (0xD1B54A32D192ED03ull * (tag + 1) + 0x9E3779B97F4A7C15ull * (index + 1)));
  g.next();
  return g;
}

}  // namespace burstsr
