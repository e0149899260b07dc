#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace flockkit {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed splitting: stream = splitmix64(global ^ fnv1a(name) + index). Every
// component draws from its own named stream, so adding a consumer never shifts
// the numbers another one sees.
inline std::uint64_t stream_seed(std::uint64_t global, std::string_view name,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(global ^ h) + index);
}

inline Rng make_rng(std::uint64_t global, std::string_view name, std::uint64_t index = 0) {
  return Rng(stream_seed(global, name, index));
}

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Marsaglia polar method.
inline double standard_normal(Rng& rng) {
  while (true) {
    const double u = 2.0 * uniform01(rng) - 1.0, v = 2.0 * uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

// Uniform point in the closed ball of radius r.
inline void uniform_in_ball(Rng& rng, int dim, double r, double* out) {
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      out[k] = standard_normal(rng);
      n2 += out[k] * out[k];
    }
  } while (n2 == 0.0);
  const double scale = r * std::pow(uniform01(rng), 1.0 / dim) / std::sqrt(n2);
  for (int k = 0; k < dim; ++k) out[k] *= scale;
}

// Isotropic Gaussian of width sigma conditioned on |v| <= r.
inline void truncated_normal_in_ball(Rng& rng, int dim, double sigma, double r, double* out) {
  while (true) {
    double n2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      out[k] = sigma * standard_normal(rng);
      n2 += out[k] * out[k];
    }
    if (n2 <= r * r) return;
  }
}

}  // namespace flockkit
