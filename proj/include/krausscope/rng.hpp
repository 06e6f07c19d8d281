#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "krausscope/common.hpp"

namespace krausscope {

// Deterministic sampler built on mt19937_64 raw bits. std::*_distribution is
// implementation-defined, so uniforms and gaussians are derived here directly
// to keep grids and channels bit-identical per seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform in (0, 1].
  double uniform() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  // Poisson counts. Knuth multiplication for small means; for large means the
  // normal approximation, which preserves the sqrt(N) shot-noise scaling this
  // library studies.
  long poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean < 64.0) {
      const double limit = std::exp(-mean);
      long k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform();
      } while (p > limit);
      return k - 1;
    }
    const double x = mean + std::sqrt(mean) * gaussian();
    return x < 0.0 ? 0 : static_cast<long>(std::llround(x));
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace krausscope
