#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace specfed {

// Counter-based deterministic RNG. Each draw is a pure function of
// (seed, counter), so streams are reproducible across platforms and
// independent of thread scheduling. Mixing is the splitmix64 finalizer.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), counter_(0) {}

  // Derives an independent stream key from (seed, salt). Used to key
  // per-client / per-round / per-phase streams.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
    return mix(seed + 0x9E3779B97F4A7C15ULL * (salt + 1));
  }

  std::uint64_t next_u64() {
    return mix(seed_ + 0x9E3779B97F4A7C15ULL * (++counter_));
  }

  // Uniform double in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::bounded: n must be > 0");
    return next_u64() % n;
  }

  // Standard normal via Box-Muller. Consumes exactly two uniforms.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // Gamma(alpha, 1) via Marsaglia-Tsang, with the standard alpha < 1 boost.
  double gamma(double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("Rng::gamma: alpha must be > 0");
    if (alpha < 1.0) {
      const double g = gamma(alpha + 1.0);
      double u = uniform01();
      while (u <= 0.0) u = uniform01();
      return g * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Symmetric Dirichlet(alpha) over n components.
  std::vector<double> dirichlet(double alpha, std::size_t n) {
    std::vector<double> x(n);
    double sum = 0.0;
    for (auto& v : x) {
      v = gamma(alpha);
      sum += v;
    }
    if (sum <= 0.0) {
      // All-zero draw is possible only through underflow at tiny alpha.
      for (auto& v : x) v = 1.0 / static_cast<double>(n);
      return x;
    }
    for (auto& v : x) v /= sum;
    return x;
  }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace specfed
