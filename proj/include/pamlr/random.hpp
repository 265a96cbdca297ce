#pragma once

// Seeded random primitives. Everything is built on std::mt19937_64 and
// transformed here rather than through <random> distributions, whose output
// differs between standard library implementations; a run is then
// reproducible bit-for-bit on any platform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include "pamlr/core.hpp"

namespace pamlr {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent seeds and for
/// counter-based draws.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of sub-stream `index` of `parent`.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Uniform in the open interval (0, 1) from 53 random bits.
inline double bits_to_unit(std::uint64_t bits) {
  // the top value would round up to exactly 1
  return std::min((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53, 0x1.fffffffffffffp-1);
}

inline double uniform01(Rng& rng) { return bits_to_unit(rng()); }

/// Uniform in [lo, hi).
inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Box-Muller pair from two uniforms; returns the cosine branch.
inline double normal_from_uniforms(double u1, double u2) {
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double standard_normal(Rng& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return normal_from_uniforms(u1, u2);
}

/// Stateless standard normal keyed by (seed, a, b).
inline double keyed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(a * 0x9E3779B97F4A7C15ULL + b));
  return normal_from_uniforms(bits_to_unit(h), bits_to_unit(splitmix64(h)));
}

/// Gamma(shape, 1) draw for shape >= 1 (Marsaglia-Tsang).
inline double gamma_sample_ge1(Rng& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

/// log of a Gamma(shape, 1) draw. For shape < 1 the boost
/// Gamma(shape+1) * U^(1/shape) is applied in log space so tiny shapes do not
/// underflow to zero.
inline double log_gamma_sample(Rng& rng, double shape) {
  if (shape < 1.0) {
    const double u = uniform01(rng);
    return std::log(gamma_sample_ge1(rng, shape + 1.0)) + std::log(u) / shape;
  }
  return std::log(gamma_sample_ge1(rng, shape));
}

/// One Beta(alpha, beta) draw as X/(X+Y) with X~Gamma(alpha), Y~Gamma(beta).
inline double beta_sample(double alpha, double beta, Rng& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw ContractViolation("beta_sample: shapes must be positive and finite (alpha=" +
                            std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
  }
  if (alpha >= 1.0 && beta >= 1.0) {
    const double x = gamma_sample_ge1(rng, alpha);
    const double y = gamma_sample_ge1(rng, beta);
    return x / (x + y);
  }
  const double lx = log_gamma_sample(rng, alpha);
  const double ly = log_gamma_sample(rng, beta);
  // x/(x+y) = 1/(1+exp(ly-lx))
  const double d = ly - lx;
  if (d > 700.0) return 0.0;
  if (d < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(d));
}

}  // namespace pamlr
