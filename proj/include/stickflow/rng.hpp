// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace stickflow {

/// splitmix64 step; used to spread replicate indices into well-separated seeds.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seeded generator with the variate draws the samplers need.  One instance
/// per worker; instances are never shared across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Beta(1, theta) by inverse CDF; theta == 0 is the point mass at 1.
  double beta_one(double theta) {
    if (theta == 0.0) return 1.0;
    if (theta < 0.0) throw std::invalid_argument("beta_one: theta < 0");
    return -std::expm1(std::log1p(-uniform()) / theta);
  }

  /// Beta(a, b) via the gamma ratio.
  double beta(double a, double b) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("beta: parameters must be positive");
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    const double x = ga(gen_);
    const double y = gb(gen_);
    const double s = x + y;
    return s > 0.0 ? x / s : 0.0;
  }

  /// Index drawn from a probability row by inverse CDF walk.
  int categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace stickflow
