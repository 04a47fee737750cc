#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace coopred {

/// Deterministic sampler built on mt19937_64. Uniform and normal draws are
/// derived from the raw engine output with fixed arithmetic, so sequences
/// are identical across platforms and standard library implementations
/// (std::normal_distribution is not portable). Normals use the polar
/// Box-Muller transform with spare caching.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(engine_() % static_cast<uint64_t>(hi - lo + 1));
  }

  double normal(double mean = 0.0, double std = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + std * spare_;
    }
    double u, v, s;
    do {
      u = uniform(-1.0, 1.0);
      v = uniform(-1.0, 1.0);
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return mean + std * (u * m);
  }

  uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace coopred
