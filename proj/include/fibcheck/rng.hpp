#pragma once

// Deterministic random streams and low-discrepancy sequences.
//
// Every stochastic component of the library draws from splitmix64 streams
// keyed by (seed, stream, index) so that results are reproducible and
// independent of evaluation order and thread count.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace fibcheck {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes a seed with stream identifiers into a new 64-bit seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

/// Counter-based generator: stateless apart from a counter, cheap to fork.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  /// Uniform in (0,1); never returns 0 so log() is safe.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal via Box-Muller (fully specified, platform independent).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    double m = std::sqrt(-2.0 * std::log(u1));
    spare_ = m * std::sin(6.283185307179586476925286766559 * u2);
    have_spare_ = true;
    return m * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Uniformly distributed direction on the unit sphere in R^n.
  std::vector<double> unit_vector(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (;;) {
      double norm2 = 0.0;
      for (auto& c : v) {
        c = normal();
        norm2 += c * c;
      }
      if (norm2 > 1e-24) {
        double inv = 1.0 / std::sqrt(norm2);
        for (auto& c : v) c *= inv;
        return v;
      }
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Van der Corput radical inverse in the given base.
inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv_base = 1.0 / static_cast<double>(base);
  double f = inv_base;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv_base;
  }
  return r;
}

/// d-dimensional Halton point (bases 2,3,5,...), components in (0,1).
inline std::vector<double> halton_point(std::uint64_t i, int dim) {
  static constexpr std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  std::vector<double> p(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) p[static_cast<std::size_t>(d)] = radical_inverse(i + 1, primes[d]);
  return p;
}

}  // namespace fibcheck
