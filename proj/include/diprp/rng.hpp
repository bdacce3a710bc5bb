#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace diprp {

using Rng = std::mt19937_64;

/// Named random substreams derived from one root seed.
enum class Stream : std::uint64_t {
  customer_arrivals = 1,
  shopping_lists = 2,
  orders = 3,
  exploration = 4,
  table_init = 5,
  episode = 6,
  layout = 7,
  bootstrap = 8,
  calibration = 9,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))) + index);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

/// Uniform real in [0, 1) with an explicit, library-independent mapping.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

/// Poisson draw; inversion by multiplication for small means.
inline std::uint64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform01(rng);
    while (prod > limit) {
      ++k;
      prod *= uniform01(rng);
    }
    return k;
  }
  return std::poisson_distribution<std::uint64_t>(mean)(rng);
}

}  // namespace diprp
